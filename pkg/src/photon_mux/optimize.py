"""SNR-constrained maximisation of the one-photon probability.

For a scheme with a single pump parameter the index is

    P1_bar(theta) = max { P(N=1)(pump) : SNR(pump) >= theta }.

The SNR is expected to decrease with the pump, so the feasible set is
``(0, pump_theta]``.  That is verified on a sample of the bracket for every
problem; violators are re-solved by a dense feasible-set grid search.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import arch as _arch
from ._search import bisect_threshold_batch, golden_max, golden_max_batch
from .analytic import family_p1_multi, snr_from
from .arch import Architecture, Asymmetric, Efficiencies, PumpFamily, Symmetric

PUMP_FLOOR = 1e-12
SCAN_POINTS = 200
SCAN_DECADES = 6.0
MONOTONE_SAMPLES = 64
REL_TOL_SNR = 1e-9
REL_WIDTH = 1e-10
# cap on m * batch * rows per vectorised evaluation
_EVAL_BUDGET = 2_000_000


class NonMonotoneSNRWarning(RuntimeWarning):
    """SNR was found increasing somewhere on the sampled pump bracket."""


@dataclass(frozen=True)
class OptResult:
    mu_star: float
    p1_bar: float
    snr_at_opt: float
    theta: float
    chosen_m: int
    scheme: dict
    eta: float
    gamma: float
    monotone: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (theta > 0 and math.isfinite(theta)):
        raise ValueError(f"theta must be finite and > 0, got {theta!r}")
    return theta


def _eval_rows(family: PumpFamily, pumps, eta, gamma, with_snr: bool = True):
    """P1 and SNR for ``pumps`` of shape ``(R, B)``, chunked over rows."""
    pumps = np.asarray(pumps, dtype=float)
    rows = max(1, _EVAL_BUDGET // max(1, family.m * pumps.shape[1]))
    p1 = np.empty_like(pumps)
    snr = np.empty_like(pumps) if with_snr else None
    for r in range(0, pumps.shape[0], rows):
        a, b = family_p1_multi(family, pumps[r : r + rows], eta, gamma, with_snr)
        p1[r : r + rows] = a
        if with_snr:
            snr[r : r + rows] = snr_from(a, b)
    return p1, snr


def _snr_fn(family, eta, gamma):
    def g(pump):
        return _eval_rows(family, pump[None, :], eta, gamma)[1][0]

    return g


def _p1_fn(family, eta, gamma):
    def f(pump):
        return _eval_rows(family, pump[None, :], eta, gamma, with_snr=False)[0][0]

    return f


def _threshold_batch(family: PumpFamily, eta, gamma, theta: float):
    """Returns ``(pump_theta, monotone)`` arrays for a batch of efficiency points."""
    snr = _snr_fn(family, eta, gamma)
    batch = eta.shape
    lo = np.full(batch, PUMP_FLOOR)
    if np.any(snr(lo) < theta):
        raise ValueError(f"theta={theta!r} is unreachable even at pump {PUMP_FLOOR}")
    hi = np.ones(batch)
    for _ in range(1100):
        need = snr(hi) >= theta
        if not need.any():
            break
        hi = np.where(need, hi * 2.0, hi)
    else:
        raise ValueError("could not bracket the SNR threshold")
    # monotonicity sample over [PUMP_FLOOR, hi]
    u = np.linspace(0.0, 1.0, MONOTONE_SAMPLES)[:, None]
    pumps = np.exp(np.log(lo) + u * (np.log(hi) - np.log(lo)))
    _, sampled = _eval_rows(family, pumps, eta, gamma)
    rises = np.diff(sampled, axis=0) > 1e-10 * np.abs(sampled[:-1])
    monotone = ~rises.any(axis=0)
    pump_theta, _ = bisect_threshold_batch(snr, lo, hi, theta, REL_TOL_SNR)
    return pump_theta, monotone


def _maximise_batch(family: PumpFamily, eta, gamma, pump_theta):
    """Coarse log scan on ``(pump_theta * 1e-6, pump_theta]`` then golden refinement."""
    u = np.logspace(-SCAN_DECADES, 0.0, SCAN_POINTS)
    pumps = u[:, None] * pump_theta[None, :]
    pumps[-1] = pump_theta
    p1, _ = _eval_rows(family, pumps, eta, gamma, with_snr=False)
    j = np.argmax(p1, axis=0)
    cols = np.arange(pump_theta.size)
    a = pumps[np.maximum(j - 1, 0), cols]
    b = pumps[np.minimum(j + 1, SCAN_POINTS - 1), cols]
    ratio = 1.0 - u[0] / u[2]
    x, fx = golden_max_batch(_p1_fn(family, eta, gamma), a, b, REL_WIDTH, ratio)
    coarse_x, coarse_f = pumps[j, cols], p1[j, cols]
    better = fx > coarse_f
    return np.where(better, x, coarse_x)


def _grid_fallback(family: PumpFamily, eta: float, gamma: float, theta: float, hi: float):
    """Dense feasible-set search for one problem whose SNR curve is not monotone."""
    pumps = np.logspace(math.log10(PUMP_FLOOR), math.log10(hi), 4001)
    p1, snr = _eval_rows(family, pumps[:, None], np.array([eta]), np.array([gamma]))
    p1, snr = p1[:, 0], snr[:, 0]
    feasible = np.where(snr >= theta, p1, -np.inf)
    j = int(np.argmax(feasible))

    def f(x):
        q, s = _eval_rows(family, np.array([[x]]), np.array([eta]), np.array([gamma]))
        return q[0, 0] if s[0, 0] >= theta else -math.inf

    lo, up = pumps[max(j - 1, 0)], pumps[min(j + 1, pumps.size - 1)]
    x, fx = golden_max(f, lo, up, REL_WIDTH)
    return x if fx > feasible[j] else pumps[j]


def optimise_family(family: PumpFamily, eta, gamma, theta: float):
    """Vectorised index over arrays of efficiencies.

    Returns ``(pump_star, p1_bar, snr_at_opt, monotone)`` arrays with the
    broadcast shape of ``eta`` and ``gamma``.
    """
    theta = _check_theta(theta)
    eta, gamma = np.broadcast_arrays(np.asarray(eta, dtype=float), np.asarray(gamma, dtype=float))
    shape = eta.shape
    eta, gamma = eta.ravel().copy(), gamma.ravel().copy()
    pump_theta, monotone = _threshold_batch(family, eta, gamma, theta)
    pump = _maximise_batch(family, eta, gamma, pump_theta)
    for i in np.flatnonzero(~monotone):
        warnings.warn(
            f"SNR not decreasing in pump at eta={eta[i]:.6g}, gamma={gamma[i]:.6g}; "
            "using grid search",
            NonMonotoneSNRWarning,
            stacklevel=2,
        )
        pump[i] = _grid_fallback(family, eta[i], gamma[i], theta, 4 * pump_theta[i])
    p1, snr = _eval_rows(family, pump[None, :], eta, gamma)
    return (
        pump.reshape(shape),
        p1[0].reshape(shape),
        snr[0].reshape(shape),
        monotone.reshape(shape),
    )


def _m_of(arch: Architecture) -> int:
    return 1 if isinstance(arch, _arch.FaintLaser) else arch.m


def solve_snr_threshold(arch: Architecture, eff: Efficiencies, theta: float) -> float:
    """Largest pump (to 1e-9 relative in SNR) whose SNR still meets ``theta``.

    The pump value inside ``arch`` is ignored.
    """
    theta = _check_theta(theta)
    family = _arch.pump_family(arch)
    eta, gamma = np.array([eff.eta]), np.array([eff.gamma])
    pump_theta, monotone = _threshold_batch(family, eta, gamma, theta)
    if not monotone[0]:
        warnings.warn("SNR not decreasing in pump on the bracket", NonMonotoneSNRWarning, stacklevel=2)
    return float(pump_theta[0])


def p1_max(arch: Architecture, eff: Efficiencies, theta: float) -> OptResult:
    """Maximum one-photon probability of ``arch`` subject to ``SNR >= theta``."""
    family = _arch.pump_family(arch)
    pump, p1, snr, mono = optimise_family(family, eff.eta, eff.gamma, theta)
    mu_star = float(pump)
    return OptResult(
        mu_star=mu_star,
        p1_bar=float(p1),
        snr_at_opt=float(snr),
        theta=float(theta),
        chosen_m=_m_of(arch),
        scheme=_arch.to_dict(_arch.with_pump(arch, mu_star)),
        eta=eff.eta,
        gamma=eff.gamma,
        monotone=bool(mono),
    )


def symmetric_depths_upto(m_max: int) -> list[int]:
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    return list(range(int(m_max).bit_length()))


def best_symmetric_grid(m_max: int, eta, gamma, theta: float):
    """Best tree size ``m' <= m_max`` per efficiency point.

    Returns ``(chosen_m, pump_star, p1_bar, snr_at_opt)`` arrays; ties go to the
    smaller tree.
    """
    best = None
    for k in symmetric_depths_upto(m_max):
        pump, p1, snr, _ = optimise_family(_arch.pump_family(Symmetric(k, 1.0)), eta, gamma, theta)
        if best is None:
            best = [np.full(p1.shape, 1), pump, p1, snr]
            continue
        win = p1 > best[2]
        best = [
            np.where(win, 2 ** k, best[0]),
            np.where(win, pump, best[1]),
            np.where(win, p1, best[2]),
            np.where(win, snr, best[3]),
        ]
    return tuple(best)


def best_symmetric(m_max: int, eff: Efficiencies, theta: float) -> OptResult:
    """Best symmetric tree with at most ``m_max`` crystals (``k = 0`` is the faint laser)."""
    chosen, pump, p1, snr = best_symmetric_grid(m_max, eff.eta, eff.gamma, theta)
    chosen_m = int(chosen)
    arch = Symmetric(_arch.symmetric_depth(chosen_m), float(pump))
    return OptResult(
        mu_star=float(pump),
        p1_bar=float(p1),
        snr_at_opt=float(snr),
        theta=float(theta),
        chosen_m=chosen_m,
        scheme=_arch.to_dict(arch),
        eta=eff.eta,
        gamma=eff.gamma,
    )


def delta_grid(m: int, eta, gamma, theta: float):
    """Percentage advantage of the ``m``-crystal chain over the best tree with ``m' <= m``."""
    _, p1_a, _, _ = optimise_family(_arch.pump_family(Asymmetric(m, 1.0)), eta, gamma, theta)
    _, _, p1_s, _ = best_symmetric_grid(m, eta, gamma, theta)
    return 100.0 * (p1_a - p1_s) / p1_s


def delta_percent(eff: Efficiencies, theta: float, m: int) -> float:
    return float(delta_grid(m, eff.eta, eff.gamma, theta))


def two_crystal_p1(mu1, mu2):
    """One-photon probability of two lossless crystals with independent pumps."""
    return mu1 * np.exp(-mu1) + mu2 * np.exp(-(mu1 + mu2))


def two_crystal_ideal_opt(rel_tol: float = 1e-10, upper: float = 5.0, max_passes: int = 50):
    """Alternating golden-section passes over ``(mu1, mu2)``; returns ``(mu1, mu2, p1)``."""
    mu1, mu2 = 0.5, 0.5
    prev = -math.inf
    for _ in range(max_passes):
        mu2, _ = golden_max(lambda x: float(two_crystal_p1(mu1, x)), 0.0, upper, rel_tol)
        mu1, val = golden_max(lambda x: float(two_crystal_p1(x, mu2)), 0.0, upper, rel_tol)
        if abs(val - prev) <= 1e-16:
            break
        prev = val
    return mu1, mu2, float(two_crystal_p1(mu1, mu2))
