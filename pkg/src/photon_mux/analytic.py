"""Exact photon-number statistics of multiplexed heralded sources.

The canonical evaluator works on an ordered channel list (see
``photon_mux.arch``) and is vectorised over pump values and efficiencies so
the optimiser can evaluate whole grids in one call.  The scheme-specific
closed forms below it are kept as independent cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammainc, xlogy

from .arch import (
    Architecture,
    ChannelSpec,
    Efficiencies,
    PumpFamily,
    asymmetric_depths,
    pump_family,
    pump_of,
)

DEFAULT_N_MAX = 40
# denominators below this are reported as an infinite SNR
SNR_FLOOR = 1e-300


def poisson_pmf(mu: float, n: int) -> float:
    if mu < 0 or n < 0:
        raise ValueError("poisson_pmf needs mu >= 0 and n >= 0")
    if mu == 0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mu) - mu - math.lgamma(n + 1))


def _multi_tail(lam):
    # P(Poisson(lam) >= 2) without the 1 - p0 - p1 cancellation
    return gammainc(2.0, lam)


def fl_snr(mu: float) -> float:
    """SNR ``mu / (e^mu - 1 - mu)`` of a Poisson pulse."""
    if mu <= 0:
        raise ValueError("fl_snr needs mu > 0")
    if mu < 1e-4:
        return 2.0 / mu - 2.0 / 3.0 + mu / 18.0
    tail = float(_multi_tail(mu))
    if tail <= SNR_FLOOR:
        return math.inf
    return mu * math.exp(-mu) / tail


# --------------------------------------------------------------------------
# canonical evaluator


class _Layout:
    """Per-channel quantities shared by every photon number.

    Arrays have shape ``(m,) + batch``; ``eta`` and ``gamma`` broadcast over
    the batch.
    """

    def __init__(self, log_mu, depths, eta, gamma):
        log_mu = np.asarray(log_mu, dtype=float)
        m = log_mu.shape[0]
        batch = log_mu.shape[1:]
        eta = np.broadcast_to(np.asarray(eta, dtype=float), batch)
        gamma = np.broadcast_to(np.asarray(gamma, dtype=float), batch)
        k = np.asarray(depths, dtype=float).reshape((m,) + (1,) * len(batch))
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            log_t = k * np.log(gamma)
            mu = np.exp(log_mu)
            lam = np.exp(log_mu + log_t)
            active = eta > 0
            exposure = np.where(active, eta * mu, 0.0)
            cum = np.cumsum(exposure, axis=0)
            before = np.concatenate([np.zeros((1,) + batch), cum[:-1]], axis=0)
            # eta * mu * (1 - t): photons heralded but lost in the routers
            lost = np.where(active & (log_t < 0), eta * mu * -np.expm1(log_t), 0.0)
            self.log1m_eta = np.log1p(-eta)
        self.eta = eta
        self.lam = lam
        self.before = before
        self.total = cum[-1]
        self.lost = lost
        self.lam_dark = lam[0] * (1.0 - eta)

    def pn(self, n: int):
        lg = math.lgamma(n + 1)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if n == 0:
                bracket = -np.expm1(-self.lost)
            else:
                bracket = -np.expm1(n * self.log1m_eta - self.lost)
            log_pois = xlogy(n, self.lam) - self.lam - lg
            triggered = np.exp(log_pois - self.before) * bracket
            dark = np.exp(xlogy(n, self.lam_dark) - self.lam_dark - lg - self.total)
        return _ordered_sum(dark, triggered)

    def p_multi(self):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            kept = np.exp(-self.lost - self.eta * self.lam) * _multi_tail(self.lam * (1.0 - self.eta))
            per_channel = np.maximum(_multi_tail(self.lam) - kept, 0.0)
            triggered = np.exp(-self.before) * per_channel
            dark = np.exp(-self.total) * _multi_tail(self.lam_dark)
        return _ordered_sum(dark, triggered)


def _ordered_sum(first, rows):
    # fixed summation order keeps results independent of the batch shape
    acc = first
    for row in rows:
        acc = acc + row
    return acc


def _channel_arrays(channels: Sequence[ChannelSpec]):
    if not channels:
        raise ValueError("at least one channel is required")
    with np.errstate(divide="ignore"):
        log_mu = np.log(np.array([c.mu for c in channels], dtype=float))
    return log_mu, [c.k for c in channels]


def general_pn(channels: Sequence[ChannelSpec], eff: Efficiencies, n: int) -> float:
    """``P(N = n)`` at the output of a prioritised multi-crystal source."""
    if n < 0:
        raise ValueError("n must be >= 0")
    log_mu, depths = _channel_arrays(channels)
    return float(_Layout(log_mu, depths, eff.eta, eff.gamma).pn(n))


def family_layout(family: PumpFamily, pump, eta, gamma) -> _Layout:
    """Layout for a pump-scaled scheme, broadcast over ``pump``, ``eta`` and ``gamma``."""
    with np.errstate(divide="ignore"):
        log_pump = np.log(np.asarray(pump, dtype=float))
        log_gamma = np.log(np.asarray(gamma, dtype=float))
    batch = np.broadcast(log_pump, log_gamma, np.asarray(eta)).shape
    log_mu = np.broadcast_to(family.log_mu(log_pump, log_gamma), (family.m,) + batch)
    return _Layout(log_mu, family.depths, eta, gamma)


def family_p1_multi(family: PumpFamily, pump, eta, gamma, multi: bool = True):
    """``(P(N=1), P(N>=2))`` arrays for a scheme over a batch of pumps/efficiencies.

    With ``multi=False`` the second entry is ``None``.
    """
    layout = family_layout(family, pump, eta, gamma)
    return layout.pn(1), (layout.p_multi() if multi else None)


def snr_from(p1, p_multi):
    p1 = np.asarray(p1, dtype=float)
    p_multi = np.asarray(p_multi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(p_multi > SNR_FLOOR, p1 / np.where(p_multi > SNR_FLOOR, p_multi, 1.0), np.inf)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PhotonDistribution:
    """Output photon-number law truncated at ``n_max``.

    ``p0``, ``p1`` and ``p_multi`` (probability of two or more photons) are
    exact; ``probs`` is the truncated table.
    """

    probs: tuple[float, ...]
    n_max: int
    p0: float
    p1: float
    p_multi: float

    @property
    def snr(self) -> float:
        return snr_of(self)

    @property
    def tail(self) -> float:
        """Mass above ``n_max`` implied by the truncation."""
        return max(0.0, 1.0 - math.fsum(self.probs))

    def to_dict(self) -> dict:
        return {
            "probs": list(self.probs),
            "n_max": self.n_max,
            "p0": self.p0,
            "p1": self.p1,
            "p_multi": self.p_multi,
            "snr": self.snr,
        }


def snr_of(dist: PhotonDistribution) -> float:
    """One-photon probability over multi-photon probability; ``inf`` when the latter vanishes."""
    return float(snr_from(dist.p1, dist.p_multi))


def _from_layout(layout: _Layout, n_max: int) -> PhotonDistribution:
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    probs = tuple(float(layout.pn(n)) for n in range(n_max + 1))
    return PhotonDistribution(probs, n_max, probs[0], probs[1], float(layout.p_multi()))


def general_distribution(
    channels: Sequence[ChannelSpec], eff: Efficiencies, n_max: int = DEFAULT_N_MAX
) -> PhotonDistribution:
    log_mu, depths = _channel_arrays(channels)
    return _from_layout(_Layout(log_mu, depths, eff.eta, eff.gamma), n_max)


def distribution(
    arch: Architecture, eff: Efficiencies, n_max: int = DEFAULT_N_MAX
) -> PhotonDistribution:
    """Output distribution of a named scheme.

    Goes through the pump family rather than ``expand`` so loss-compensated
    pumps too large for a float are still handled in log space.
    """
    layout = family_layout(pump_family(arch), pump_of(arch), eff.eta, eff.gamma)
    return _from_layout(layout, n_max)


# --------------------------------------------------------------------------
# scheme-specific closed forms (cross-checks)


def mhps_pn(m: int, mu: float, n: int) -> float:
    """Lossless m-crystal source with perfect heralding."""
    if m < 1 or mu < 0 or n < 0:
        raise ValueError("mhps_pn needs m >= 1, mu >= 0, n >= 0")
    if mu == 0:
        return 1.0 if n == 0 else 0.0
    if n == 0:
        return math.exp(-m * mu)
    return poisson_pmf(mu, n) * math.expm1(-m * mu) / math.expm1(-mu)


def _bracket(n: int, eta: float, lost: float) -> float:
    # 1 - (1 - eta)**n * exp(-lost)
    if n == 0:
        return -math.expm1(-lost)
    if eta >= 1.0:
        return 1.0
    return -math.expm1(n * math.log1p(-eta) - lost)


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def smhps_pn(k: int, mu_tilde: float, eff: Efficiencies, n: int) -> float:
    """Symmetric tree of depth ``k`` with every crystal pumped at ``mu_tilde / gamma**k``."""
    if k < 0 or mu_tilde < 0 or n < 0:
        raise ValueError("smhps_pn needs k >= 0, mu_tilde >= 0, n >= 0")
    eta, gamma = eff.eta, eff.gamma
    inv_tk = _exp(-k * math.log(gamma))  # 1 / gamma**k
    y1 = eta * mu_tilde * inv_tk
    ym = eta * mu_tilde * _exp(k * math.log(2.0 / gamma))
    dark = poisson_pmf((1 - eta) * mu_tilde, n) * math.exp(-ym)
    geometric = 2.0 ** k if y1 == 0 else math.expm1(-ym) / math.expm1(-y1)
    lost = eta * mu_tilde * math.expm1(-k * math.log(gamma)) if eta > 0 else 0.0
    return dark + poisson_pmf(mu_tilde, n) * _bracket(n, eta, lost) * geometric


def amhps_pn(m: int, mu_bar: float, eff: Efficiencies, n: int) -> float:
    """Asymmetric chain of ``m`` crystals, loss-compensated pumps ``mu_bar / gamma**k_i``.

    The closed form is singular at ``gamma = 1``; that case is delegated to
    the channel evaluator.
    """
    if m < 1 or mu_bar < 0 or n < 0:
        raise ValueError("amhps_pn needs m >= 1, mu_bar >= 0, n >= 0")
    eta, gamma = eff.eta, eff.gamma
    if gamma == 1.0:
        depths = asymmetric_depths(m)
        return general_pn([ChannelSpec(mu_bar, k) for k in depths], eff, n)
    lg = math.log(gamma)
    # (2 - gamma) gamma^(1-m) - 1 rewritten to avoid cancellation as gamma -> 1
    total = eta * mu_bar * (1 + (2 - gamma) * math.expm1((1 - m) * lg) / (1 - gamma)) if eta > 0 else 0.0
    dark = poisson_pmf((1 - eta) * mu_bar, n) * math.exp(-total)
    acc = 0.0
    for i, k in enumerate(asymmetric_depths(m), start=1):
        if eta == 0:
            break
        before = eta * mu_bar * math.expm1((1 - i) * lg) / (1 - gamma)
        if before > 745:
            break
        lost = eta * mu_bar * math.expm1(-k * lg)
        acc += math.exp(-before) * _bracket(n, eta, lost)
    return dark + poisson_pmf(mu_bar, n) * acc


def smhps_snr_closed(k: int, mu: float, eff: Efficiencies) -> float:
    """SNR of the symmetric tree in closed form (pump ``mu / gamma**k`` per crystal)."""
    if k < 0 or mu <= 0:
        raise ValueError("smhps_snr_closed needs k >= 0 and mu > 0")
    eta, gamma = eff.eta, eff.gamma
    y1 = eta * mu * _exp(-k * math.log(gamma))
    ym = eta * mu * _exp(k * math.log(2.0 / gamma))
    em = eta * mu
    ac = math.exp(em - y1)  # e^{eta mu} e^{-eta mu / gamma^k}
    bc = math.exp(em - ym)
    a, b = math.exp(-y1), math.exp(-ym)
    d = 1 + mu - em
    num = mu * (1 - ac * (1 - eta) - (b - bc * (1 - eta)))
    ex = math.exp(mu)
    den = math.expm1(mu) - mu - (a * ex - ac * d) + (b * (1 + mu) - bc * d)
    if den <= SNR_FLOOR:
        return math.inf
    return num / den


def smhps_gain(k: int, mu: float, eff: Efficiencies) -> float:
    """One-photon gain of the symmetric tree over the faint laser with pumps rescaled by ``2**-k``."""
    if k < 0 or mu <= 0:
        raise ValueError("smhps_gain needs k >= 0 and mu > 0")
    eta, gamma = eff.eta, eff.gamma
    if eta == 0:
        return 1.0
    inv_2g = _exp(-k * math.log(2 * gamma))  # (2 gamma)^-k
    tk = math.exp(k * math.log(gamma))
    num = (
        1
        - math.exp(-(1 - tk) * inv_2g * eta * mu) * (1 - eta)
        - math.exp(-eta * mu * _exp(-k * math.log(gamma)))
        * (1 - math.exp(eta * mu * 2.0 ** -k) * (1 - eta))
    )
    den = -math.expm1(-eta * mu * inv_2g)
    return num / den
