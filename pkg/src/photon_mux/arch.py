"""Source architectures and their expansion into per-crystal channels.

Every scheme is evaluated through one representation: an ordered list of
channels, each with a mean pair number and a router depth.  Position in the
list is the switch priority (index 0 is checked first).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Union

import numpy as np

DEFAULT_MAX_PUMP = 1e6

SCHEME_ALIASES = {
    "faint_laser": "faint_laser",
    "fl": "faint_laser",
    "ideal": "ideal",
    "mhps": "ideal",
    "symmetric": "symmetric",
    "smhps": "symmetric",
    "asymmetric": "asymmetric",
    "amhps": "asymmetric",
    "general": "general",
}


class ArchitectureError(ValueError):
    """Invalid architecture, efficiency or channel description."""


def _check_pump(value: float, name: str = "pump") -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ArchitectureError(f"{name} must be finite and >= 0, got {value!r}")
    return value


def _check_count(value: Any, name: str, minimum: int) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ArchitectureError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ArchitectureError(f"{name} must be >= {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class Efficiencies:
    """Detector efficiency ``eta`` and per-router transmissivity ``gamma``."""

    eta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        eta, gamma = float(self.eta), float(self.gamma)
        if not 0.0 <= eta <= 1.0:
            raise ArchitectureError(f"eta must lie in [0, 1], got {eta!r}")
        # every compensated pump divides by gamma**k
        if not 0.0 < gamma <= 1.0:
            raise ArchitectureError(f"gamma must lie in (0, 1], got {gamma!r}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "gamma", gamma)


IDEAL = Efficiencies(1.0, 1.0)


@dataclass(frozen=True)
class ChannelSpec:
    mu: float
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mu", _check_pump(self.mu, "mu"))
        object.__setattr__(self, "k", _check_count(self.k, "k", 0))


@dataclass(frozen=True)
class FaintLaser:
    pump: float

    def __post_init__(self):
        object.__setattr__(self, "pump", _check_pump(self.pump))


@dataclass(frozen=True)
class IdealMHPS:
    """``m`` crystals behind a single m-to-1 switch, no router losses."""

    m: int
    pump: float

    def __post_init__(self):
        object.__setattr__(self, "m", _check_count(self.m, "m", 1))
        object.__setattr__(self, "pump", _check_pump(self.pump))


@dataclass(frozen=True)
class Symmetric:
    """Binary router tree of depth ``k`` over ``2**k`` crystals."""

    k: int
    pump: float

    def __post_init__(self):
        object.__setattr__(self, "k", _check_count(self.k, "k", 0))
        object.__setattr__(self, "pump", _check_pump(self.pump))

    @property
    def m(self) -> int:
        return 2 ** self.k


@dataclass(frozen=True)
class Asymmetric:
    """Chain of ``m`` crystals, each new one joined by a single router."""

    m: int
    pump: float

    def __post_init__(self):
        object.__setattr__(self, "m", _check_count(self.m, "m", 1))
        object.__setattr__(self, "pump", _check_pump(self.pump))


@dataclass(frozen=True)
class General:
    channels: tuple[ChannelSpec, ...]

    def __post_init__(self):
        channels = tuple(
            c if isinstance(c, ChannelSpec) else ChannelSpec(**c) for c in self.channels
        )
        if not channels:
            raise ArchitectureError("general architecture needs at least one channel")
        object.__setattr__(self, "channels", channels)

    @property
    def m(self) -> int:
        return len(self.channels)


Architecture = Union[FaintLaser, IdealMHPS, Symmetric, Asymmetric, General]


def asymmetric_depths(m: int) -> list[int]:
    """Router depths of the chain: ``i`` for the first ``m-1`` crystals, ``m-1`` for the last."""
    m = _check_count(m, "m", 1)
    return list(range(1, m)) + [m - 1]


def symmetric_depth(m: int) -> int:
    """Tree depth for ``m`` crystals; ``m`` must be an exact power of two."""
    m = _check_count(m, "m", 1)
    if m & (m - 1):
        raise ArchitectureError(f"symmetric scheme needs m = 2**k, got m={m}")
    return m.bit_length() - 1


@dataclass(frozen=True)
class PumpFamily:
    """Channel layout whose pumps scale with a single parameter.

    Channel ``i`` receives ``log mu_i = log(pump) + base_log_mu[i] - comp * k[i] * log(gamma)``
    where ``comp`` is 1 for loss-compensated schemes.  Working with logarithms
    keeps ``pump / gamma**k`` finite-in-log even when the pump itself overflows.
    """

    depths: tuple[int, ...]
    base_log_mu: tuple[float, ...]
    compensated: bool

    @property
    def m(self) -> int:
        return len(self.depths)

    def log_mu(self, log_pump, log_gamma):
        """Array of shape ``(m,) + broadcast(log_pump, log_gamma).shape``."""
        k = np.asarray(self.depths, dtype=float)
        base = np.asarray(self.base_log_mu, dtype=float)
        log_pump = np.asarray(log_pump, dtype=float)
        log_gamma = np.asarray(log_gamma, dtype=float)
        shape = np.broadcast(log_pump, log_gamma).shape
        k = k.reshape((-1,) + (1,) * len(shape))
        base = base.reshape((-1,) + (1,) * len(shape))
        out = base + log_pump
        if self.compensated:
            out = out - k * log_gamma
        return np.broadcast_to(out, (self.m,) + shape)


def pump_family(arch: Architecture) -> PumpFamily:
    """Pump-scaling layout of a scheme; ``General`` scales all its channel pumps together."""
    if isinstance(arch, FaintLaser):
        return PumpFamily((0,), (0.0,), False)
    if isinstance(arch, IdealMHPS):
        return PumpFamily((0,) * arch.m, (0.0,) * arch.m, False)
    if isinstance(arch, Symmetric):
        return PumpFamily((arch.k,) * arch.m, (0.0,) * arch.m, True)
    if isinstance(arch, Asymmetric):
        return PumpFamily(tuple(asymmetric_depths(arch.m)), (0.0,) * arch.m, True)
    if isinstance(arch, General):
        with np.errstate(divide="ignore"):
            base = tuple(float(np.log(c.mu)) for c in arch.channels)
        return PumpFamily(tuple(c.k for c in arch.channels), base, False)
    raise ArchitectureError(f"unknown architecture {arch!r}")


def pump_of(arch: Architecture) -> float:
    return 1.0 if isinstance(arch, General) else arch.pump


def with_pump(arch: Architecture, pump: float) -> Architecture:
    """Same scheme with a different pump; for ``General`` the channels are rescaled by ``pump``."""
    if isinstance(arch, General):
        return General(tuple(ChannelSpec(c.mu * pump, c.k) for c in arch.channels))
    return type(arch)(**{**_fields(arch), "pump": pump})


def _fields(arch) -> dict:
    return {f: getattr(arch, f) for f in arch.__dataclass_fields__}


def expand(
    arch: Architecture, eff: Efficiencies, max_pump: float | None = DEFAULT_MAX_PUMP
) -> list[ChannelSpec]:
    """Per-crystal channels of ``arch`` in priority order.

    Loss-compensated schemes raise the pump of a channel behind ``k`` routers
    to ``pump / gamma**k``.  Raises ``ArchitectureError`` when any channel pump
    exceeds ``max_pump`` (pass ``None`` to disable the bound).
    """
    if isinstance(arch, General):
        return list(arch.channels)
    family = pump_family(arch)
    with np.errstate(divide="ignore", over="ignore"):
        mus = np.exp(family.log_mu(np.log(pump_of(arch)), np.log(eff.gamma)))
    bound = math.inf if max_pump is None else max_pump
    if np.any(mus > bound):
        raise ArchitectureError(
            f"compensated pump {float(mus.max()):.6g} exceeds bound {bound:.6g}"
        )
    return [ChannelSpec(float(mu), k) for mu, k in zip(mus, family.depths)]


def to_dict(arch: Architecture) -> dict:
    if isinstance(arch, FaintLaser):
        return {"scheme": "faint_laser", "pump": arch.pump}
    if isinstance(arch, IdealMHPS):
        return {"scheme": "ideal", "m": arch.m, "pump": arch.pump}
    if isinstance(arch, Symmetric):
        return {"scheme": "symmetric", "k": arch.k, "m": arch.m, "pump": arch.pump}
    if isinstance(arch, Asymmetric):
        return {"scheme": "asymmetric", "m": arch.m, "pump": arch.pump}
    if isinstance(arch, General):
        return {"scheme": "general", "channels": [{"mu": c.mu, "k": c.k} for c in arch.channels]}
    raise ArchitectureError(f"unknown architecture {arch!r}")


_ALLOWED_KEYS = {
    "faint_laser": {"pump"},
    "ideal": {"m", "pump"},
    "symmetric": {"k", "m", "pump"},
    "asymmetric": {"m", "pump"},
    "general": {"channels"},
}


def from_dict(doc: dict) -> Architecture:
    """Build an architecture from its JSON document form.

    >>> from_dict({"scheme": "asymmetric", "m": 8, "pump": 0.2})
    Asymmetric(m=8, pump=0.2)
    """
    if not isinstance(doc, dict) or "scheme" not in doc:
        raise ArchitectureError("architecture document needs a 'scheme' field")
    scheme = SCHEME_ALIASES.get(str(doc["scheme"]).lower())
    if scheme is None:
        raise ArchitectureError(f"unknown scheme {doc['scheme']!r}")
    extra = set(doc) - {"scheme"} - _ALLOWED_KEYS[scheme]
    if extra:
        raise ArchitectureError(f"unknown keys for {scheme}: {sorted(extra)}")
    try:
        if scheme == "general":
            channels = doc["channels"]
            for c in channels:
                if set(c) - {"mu", "k"}:
                    raise ArchitectureError(f"unknown channel keys: {sorted(set(c) - {'mu', 'k'})}")
            return General(tuple(ChannelSpec(c["mu"], c.get("k", 0)) for c in channels))
        pump = doc["pump"]
        if scheme == "faint_laser":
            return FaintLaser(pump)
        if scheme == "ideal":
            return IdealMHPS(doc["m"], pump)
        if scheme == "asymmetric":
            return Asymmetric(doc["m"], pump)
        if "k" in doc:
            arch = Symmetric(doc["k"], pump)
            if "m" in doc and doc["m"] != arch.m:
                raise ArchitectureError(f"m={doc['m']} inconsistent with k={doc['k']}")
            return arch
        return Symmetric(symmetric_depth(doc["m"]), pump)
    except KeyError as exc:
        raise ArchitectureError(f"missing field {exc.args[0]!r} for scheme {scheme}") from None
    except TypeError as exc:
        raise ArchitectureError(str(exc)) from None


def dumps(arch: Architecture) -> str:
    return json.dumps(to_dict(arch))


def loads(text: str) -> Architecture:
    return from_dict(json.loads(text))
