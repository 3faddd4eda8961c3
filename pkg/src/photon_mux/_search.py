"""Bracketed scalar searches: golden section for maxima, bisection for thresholds.

Both come in a scalar form and a lock-step array form that advances a whole
batch of independent problems at once.
"""
from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI2 = (3 - math.sqrt(5)) / 2


def _golden_steps(width_ratio, rel_tol):
    if width_ratio <= rel_tol:
        return 0
    return int(math.ceil(math.log(rel_tol / width_ratio) / math.log(INV_PHI)))


def golden_max(f, a, b, rel_tol=1e-10):
    """Maximise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``.

    Stops once the bracket width is below ``rel_tol * max(|a|, |b|)``.
    """
    a, b = min(a, b), max(a, b)
    scale = max(abs(a), abs(b), 1e-300)
    h = b - a
    c, d = a + INV_PHI2 * h, a + INV_PHI * h
    fc, fd = f(c), f(d)
    for _ in range(_golden_steps(h / scale, rel_tol)):
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + INV_PHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + INV_PHI * h
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def golden_max_batch(f, a, b, rel_tol=1e-10, width_ratio=None):
    """Array version of :func:`golden_max`; ``f`` maps shape ``(B,)`` to ``(B,)``.

    Every problem takes the same number of steps, set by ``width_ratio`` (the
    largest initial ``(b - a) / b``) when given, so a problem's answer does not
    depend on what else is in the batch.
    """
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    h = b - a
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
    if width_ratio is None:
        width_ratio = float(np.max(h / scale)) if a.size else 0.0
    steps = _golden_steps(width_ratio, rel_tol)
    c, d = a + INV_PHI2 * h, a + INV_PHI * h
    fc, fd = f(c), f(d)
    for _ in range(steps):
        left = fc >= fd
        # left: keep [a, d]; right: keep [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        h = b - a
        new_x = np.where(left, a + INV_PHI2 * h, a + INV_PHI * h)
        new_f = f(new_x)
        c_next = np.where(left, new_x, d)
        fc_next = np.where(left, new_f, fd)
        d = np.where(left, c, new_x)
        fd = np.where(left, fc, new_f)
        c, fc = c_next, fc_next
    pick = fc >= fd
    return np.where(pick, c, d), np.where(pick, fc, fd)


def bisect_threshold_batch(g, lo, hi, target, rel_tol=1e-9, max_iter=120):
    """Geometric bisection for a decreasing ``g``: ``g(lo) >= target > g(hi)``.

    Returns the feasible end ``lo`` (``g(lo) >= target``) once
    ``|g(lo) - target| <= rel_tol * target`` or the iteration cap is hit.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    g_lo = g(lo)
    for _ in range(max_iter):
        done = np.abs(g_lo - target) <= rel_tol * target
        if np.all(done):
            break
        mid = np.sqrt(lo * hi)
        g_mid = g(mid)
        ok = (g_mid >= target) & ~done
        bad = (g_mid < target) & ~done
        lo = np.where(ok, mid, lo)
        g_lo = np.where(ok, g_mid, g_lo)
        hi = np.where(bad, mid, hi)
    return lo, g_lo
