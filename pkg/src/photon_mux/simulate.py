"""Event-level Monte Carlo of a prioritised multi-crystal heralded source.

Each trial draws the pair numbers of every crystal, thresholds the heralding
detectors, routes the first heralded channel (channel 1 when none fires) and
thins its photons by the router transmission.  Nothing here uses the
analytic formulas, so it serves as their independent check.

Reproducibility: trials are cut into fixed chunks of ``CHUNK`` trials and
chunk ``c`` draws from ``PCG64(SeedSequence(seed, spawn_key=(c,)))``.  The
result is a sum of integer counts, so it does not depend on how many workers
process the chunks or in which order.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analytic import general_distribution
from .arch import Asymmetric, ChannelSpec, Efficiencies, Symmetric, expand, to_dict

CHUNK = 65536
THREADS_ENV = "PHOTON_MUX_THREADS"


@dataclass(frozen=True)
class McEstimate:
    counts: tuple[int, ...]  # n = 0..n_cap, then the overflow bin n > n_cap
    chi_hist: tuple[int, ...]  # chi = 0 (nothing heralded), 1..m
    n_trials: int
    seed: int

    @property
    def n_cap(self) -> int:
        return len(self.counts) - 2

    @property
    def p_hat(self) -> list[float]:
        return [c / self.n_trials for c in self.counts[:-1]]

    @property
    def overflow(self) -> float:
        return self.counts[-1] / self.n_trials

    @property
    def stderr(self) -> list[float]:
        return [math.sqrt(p * (1 - p) / self.n_trials) for p in self.p_hat]

    def to_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "stderr": self.stderr,
            "n_trials": self.n_trials,
            "seed": self.seed,
            "chi_hist": list(self.chi_hist),
            "overflow": self.overflow,
        }


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _run_chunk(mu, transmission, eta, size, rng, n_cap):
    m = mu.size
    pairs = rng.poisson(mu, size=(size, m))
    heralded = rng.binomial(pairs, eta) > 0
    fired = heralded.any(axis=1)
    first = heralded.argmax(axis=1)  # 0 when nothing fired, which is also the fallback channel
    chi = np.where(fired, first + 1, 0)
    signal = pairs[np.arange(size), first]
    out = rng.binomial(signal, transmission[first])
    counts = np.bincount(np.minimum(out, n_cap + 1), minlength=n_cap + 2)
    return counts, np.bincount(chi, minlength=m + 1)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def simulate(
    channels: Sequence[ChannelSpec],
    eff: Efficiencies,
    n_trials: int,
    seed: int,
    n_cap: int = 8,
    workers: int | None = None,
) -> McEstimate:
    if n_cap < 2:
        raise ValueError("n_cap must be >= 2")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if not channels:
        raise ValueError("at least one channel is required")
    mu = np.array([c.mu for c in channels], dtype=float)
    transmission = np.array([eff.gamma ** c.k for c in channels], dtype=float)
    sizes = [min(CHUNK, n_trials - start) for start in range(0, n_trials, CHUNK)]

    def work(c):
        return _run_chunk(mu, transmission, eff.eta, sizes[c], chunk_rng(seed, c), n_cap)

    workers = workers or default_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(c) for c in range(len(sizes))]
    counts = sum(p[0] for p in parts)
    chi = sum(p[1] for p in parts)
    return McEstimate(tuple(int(x) for x in counts), tuple(int(x) for x in chi), n_trials, seed)


def trigger_law(channels: Sequence[ChannelSpec], eta: float) -> list[float]:
    """``P(chi = i)`` for ``i = 0..m``: the first heralded channel, 0 if none fires."""
    exposure = [eta * c.mu for c in channels]
    out = [math.exp(-math.fsum(exposure))]
    before = 0.0
    for e in exposure:
        out.append(-math.expm1(-e) * math.exp(-before))
        before += e
    return out


@dataclass(frozen=True)
class Discrepancy:
    kind: str  # "n" or "chi"
    index: int
    estimate: float
    expected: float
    allowed: float

    @property
    def ok(self) -> bool:
        return abs(self.estimate - self.expected) <= self.allowed


def compare(
    est: McEstimate,
    expected_pn: Sequence[float],
    channels: Sequence[ChannelSpec],
    eta: float,
    n_check: int = 4,
    sigmas: float = 4.0,
    floor: float = 1e-4,
) -> list[Discrepancy]:
    """Per-bin checks of an estimate against exact values.

    Photon-number bins pass within ``max(sigmas * stderr, floor)``; the chi
    histogram passes within ``sigmas`` binomial standard deviations of the
    trigger law.
    """
    out = []
    p_hat, stderr = est.p_hat, est.stderr
    for n in range(min(n_check, est.n_cap) + 1):
        out.append(Discrepancy("n", n, p_hat[n], expected_pn[n], max(sigmas * stderr[n], floor)))
    for i, p in enumerate(trigger_law(channels, eta)):
        sd = math.sqrt(p * (1 - p) / est.n_trials)
        out.append(Discrepancy("chi", i, est.chi_hist[i] / est.n_trials, p, sigmas * sd))
    return out


VALIDATION_ETAS = (0.0, 0.3, 0.6, 1.0)
VALIDATION_GAMMAS = (0.3, 0.5, 0.8, 1.0)


def validation_cases():
    """Standard scheme/efficiency grid: 3 schemes x 4 eta x 4 gamma = 48 cases."""
    schemes = (Symmetric(2, 0.3), Asymmetric(5, 0.2), Asymmetric(8, 0.5))
    return [
        (arch, Efficiencies(eta, gamma))
        for arch in schemes
        for eta in VALIDATION_ETAS
        for gamma in VALIDATION_GAMMAS
    ]


@dataclass(frozen=True)
class CaseReport:
    scheme: dict
    eta: float
    gamma: float
    checks: tuple[Discrepancy, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "eta": self.eta,
            "gamma": self.gamma,
            "ok": self.ok,
            "checks": [
                {"kind": c.kind, "index": c.index, "estimate": c.estimate,
                 "expected": c.expected, "allowed": c.allowed, "ok": c.ok}
                for c in self.checks
            ],
        }


def validate_case(arch, eff: Efficiencies, n_trials: int, seed: int, workers: int | None = None) -> CaseReport:
    channels = expand(arch, eff)
    exact = general_distribution(channels, eff, n_max=8).probs
    est = simulate(channels, eff, n_trials, seed, n_cap=8, workers=workers)
    return CaseReport(to_dict(arch), eff.eta, eff.gamma, tuple(compare(est, exact, channels, eff.eta)))


def run_validation(n_trials: int = 10**6, seed: int = 20130401, cases=None, workers: int | None = None):
    """Monte Carlo check of every case; case ``i`` uses seed ``seed + i``."""
    cases = validation_cases() if cases is None else cases
    return [validate_case(a, e, n_trials, seed + i, workers) for i, (a, e) in enumerate(cases)]
