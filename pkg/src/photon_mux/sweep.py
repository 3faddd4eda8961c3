"""Scalability curves in the crystal count and contour grids over (eta, gamma)."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import arch as _arch
from .arch import ArchitectureError, Efficiencies
from .optimize import best_symmetric_grid, optimise_family

DEFAULT_M_VALUES = tuple(range(2, 257))
DEFAULT_AXIS = tuple(np.linspace(0.01, 1.0, 101).round(12).tolist())  # same as axis(101)
METRICS = ("p1_symmetric_best", "p1_asymmetric", "delta")
MAX_GRID_POINTS = 1_000_000


def fmt(x) -> str:
    """17 significant digits: round-trips every double."""
    return format(float(x), ".17g")


def _scheme(kind: str, m: int) -> _arch.Architecture:
    kind = _arch.SCHEME_ALIASES.get(kind, kind)
    if kind == "asymmetric":
        return _arch.Asymmetric(m, 1.0)
    if kind == "symmetric":
        return _arch.Symmetric(_arch.symmetric_depth(m), 1.0)
    if kind == "ideal":
        return _arch.IdealMHPS(m, 1.0)
    if kind == "faint_laser":
        return _arch.FaintLaser(1.0)
    raise ArchitectureError(f"no scalability curve for scheme {kind!r}")


@dataclass(frozen=True)
class CurvePoint:
    m: int
    p1: float
    mu_star: float
    snr: float


def scalability_curves(
    kind: str,
    theta: float,
    pairs: Sequence[Efficiencies],
    m_values: Sequence[int] = DEFAULT_M_VALUES,
) -> list[list[CurvePoint]]:
    """One curve per efficiency pair; each ``m`` is optimised for all pairs in one batch."""
    m_values = [int(m) for m in m_values]
    if m_values != sorted(m_values):
        raise ValueError("m_values must be sorted ascending")
    archs = [_scheme(kind, m) for m in m_values]  # rejects non powers of two up front
    eta = np.array([e.eta for e in pairs], dtype=float)
    gamma = np.array([e.gamma for e in pairs], dtype=float)
    curves: list[list[CurvePoint]] = [[] for _ in pairs]
    for m, arch in zip(m_values, archs):
        pump, p1, snr, _ = optimise_family(_arch.pump_family(arch), eta, gamma, theta)
        for c, curve in enumerate(curves):
            curve.append(CurvePoint(m, float(p1[c]), float(pump[c]), float(snr[c])))
    return curves


def scalability_curve(
    kind: str, theta: float, eff: Efficiencies, m_values: Sequence[int] = DEFAULT_M_VALUES
) -> list[CurvePoint]:
    """Index ``P1_bar(theta)`` for each crystal count in ``m_values`` (ascending)."""
    return scalability_curves(kind, theta, [eff], m_values)[0]


def curve_csv(points: Sequence[CurvePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "p1", "mu_star", "snr"])
    for p in points:
        w.writerow([p.m, fmt(p.p1), fmt(p.mu_star), fmt(p.snr)])
    return buf.getvalue()


@dataclass(frozen=True)
class SweepGrid:
    """``values[i, j]`` is the metric at ``eta_axis[i]``, ``gamma_axis[j]``."""

    metric: str
    eta_axis: tuple[float, ...]
    gamma_axis: tuple[float, ...]
    values: np.ndarray
    chosen_m: np.ndarray
    mu_star: np.ndarray
    theta: float
    m: int
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eta", "gamma", "value", "chosen_m", "mu_star"])
        for i, eta in enumerate(self.eta_axis):
            for j, gamma in enumerate(self.gamma_axis):
                w.writerow(
                    [fmt(eta), fmt(gamma), fmt(self.values[i, j]), int(self.chosen_m[i, j]), fmt(self.mu_star[i, j])]
                )
        return buf.getvalue()

    def at(self, eta: float, gamma: float) -> float:
        """Value at the grid cell nearest to ``(eta, gamma)``."""
        i = int(np.argmin(np.abs(np.asarray(self.eta_axis) - eta)))
        j = int(np.argmin(np.abs(np.asarray(self.gamma_axis) - gamma)))
        return float(self.values[i, j])


def _check_axis(axis, name):
    axis = tuple(float(x) for x in axis)
    if not axis or any(not 0.0 < x <= 1.0 for x in axis):
        raise ValueError(f"{name} values must lie in (0, 1]")
    return axis


def _metric_block(metric: str, theta: float, m: int, eta, gamma):
    """``(value, chosen_m, mu_star)`` arrays for one block of cells.

    For ``delta`` the recorded pump is the chain's and ``chosen_m`` the tree's.
    """
    if metric == "p1_asymmetric":
        pump, p1, _, _ = optimise_family(_arch.pump_family(_arch.Asymmetric(m, 1.0)), eta, gamma, theta)
        return p1, np.full(p1.shape, m), pump
    chosen, pump_s, p1_s, _ = best_symmetric_grid(m, eta, gamma, theta)
    if metric == "p1_symmetric_best":
        return p1_s, chosen, pump_s
    pump_a, p1_a, _, _ = optimise_family(_arch.pump_family(_arch.Asymmetric(m, 1.0)), eta, gamma, theta)
    return 100.0 * (p1_a - p1_s) / p1_s, chosen, pump_a


def contour_grid(
    metric: str,
    theta: float,
    m: int,
    eta_axis: Sequence[float] = DEFAULT_AXIS,
    gamma_axis: Sequence[float] = DEFAULT_AXIS,
    workers: int = 1,
) -> SweepGrid:
    """Evaluate ``metric`` on the (eta, gamma) grid; rows of eta are independent work items."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    eta_axis = _check_axis(eta_axis, "eta_axis")
    gamma_axis = _check_axis(gamma_axis, "gamma_axis")
    if len(eta_axis) * len(gamma_axis) > MAX_GRID_POINTS:
        raise ValueError("grid exceeds 1e6 points")
    # each block covers whole eta rows; results do not depend on the blocking
    rows_per_block = max(1, 4096 // len(gamma_axis))
    blocks = [eta_axis[i : i + rows_per_block] for i in range(0, len(eta_axis), rows_per_block)]
    g = np.asarray(gamma_axis)

    def work(etas):
        e, gg = np.meshgrid(np.asarray(etas), g, indexing="ij")
        return _metric_block(metric, theta, m, e, gg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    values, chosen, pump = (np.concatenate([p[i] for p in parts], axis=0) for i in range(3))
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("non-finite value in sweep grid")
    return SweepGrid(
        metric=metric,
        eta_axis=eta_axis,
        gamma_axis=gamma_axis,
        values=values,
        chosen_m=chosen.astype(int),
        mu_star=pump,
        theta=float(theta),
        m=int(m),
        metadata={"scheme": metric, "m": int(m), "theta": float(theta)},
    )


def axis(points: int) -> tuple[float, ...]:
    """Uniform axis over ``[0.01, 1]``."""
    if points < 2:
        raise ValueError("grid needs at least 2 points per axis")
    return tuple(np.linspace(0.01, 1.0, points).round(12).tolist())


def delta_from(asym: SweepGrid, sym: SweepGrid) -> SweepGrid:
    """Delta grid assembled from matching chain and best-tree grids (same values as ``contour_grid('delta')``)."""
    if asym.m != sym.m or asym.eta_axis != sym.eta_axis or asym.gamma_axis != sym.gamma_axis:
        raise ValueError("grids do not match")
    values = 100.0 * (asym.values - sym.values) / sym.values
    return SweepGrid("delta", asym.eta_axis, asym.gamma_axis, values, sym.chosen_m, asym.mu_star,
                     asym.theta, asym.m, {"scheme": "delta", "m": asym.m, "theta": asym.theta})
