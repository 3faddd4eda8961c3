"""Regenerate every figure dataset (CSV + SVG) with a checksum manifest."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import shutil
from pathlib import Path
from typing import Sequence

import numpy as np

from . import render
from .analytic import general_distribution
from .arch import Asymmetric, Efficiencies, FaintLaser, IdealMHPS, Symmetric, expand, to_dict
from .optimize import p1_max, two_crystal_ideal_opt, two_crystal_p1
from .simulate import simulate
from .sweep import axis, contour_grid, delta_from, fmt, scalability_curves

# the plotted (eta, gamma) pairs are not listed in the text; these span ideal to lossy
DEFAULT_PAIRS = ((1.0, 1.0), (0.9, 0.9), (0.8, 0.7), (0.6, 0.5), (0.5, 0.3))
THETA = 10.0
FIG2_THETAS = tuple(np.logspace(0.0, 2.0, 41).round(12).tolist())
FIG2_MS = (4, 8, 16)
P1_LEVELS = (0.155, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DELTA_LEVELS = (-20.0, -10.0, 0.0, 10.0, 20.0, 40.0, 60.0)
MIN_FREE_BYTES = 1 << 30


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def fig2_rows(thetas: Sequence[float] = FIG2_THETAS, ms: Sequence[int] = FIG2_MS):
    """``(scheme, m, theta, p1, mu_star, snr)`` for the faint laser and lossless m-crystal sources."""
    ideal = Efficiencies(1.0, 1.0)
    rows = []
    for arch in [FaintLaser(1.0)] + [IdealMHPS(m, 1.0) for m in ms]:
        m = getattr(arch, "m", 1)
        for theta in thetas:
            r = p1_max(arch, ideal, theta)
            rows.append((to_dict(arch)["scheme"], m, theta, r.p1_bar, r.mu_star, r.snr_at_opt))
    return rows


def fig9_grid(points: int = 121, upper: float = 3.0):
    axis_ = np.linspace(0.0, upper, points)
    mu1, mu2 = np.meshgrid(axis_, axis_, indexing="ij")
    return axis_, two_crystal_p1(mu1, mu2)


class _Bundle:
    def __init__(self, outdir: Path):
        self.outdir = outdir
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str):
        data = text.encode("utf-8")
        (self.outdir / name).write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()


def _curve_rows(pairs, curves):
    rows = []
    for (eta, gamma), curve in zip(pairs, curves):
        for p in curve:
            rows.append((fmt(eta), fmt(gamma), p.m, fmt(p.p1), fmt(p.mu_star), fmt(p.snr)))
    return rows


def _curve_svg(pairs, curves, title, fl_p1):
    series = [(f"eta={e:g}, gamma={g:g}", [p.m for p in c], [p.p1 for p in c]) for (e, g), c in zip(pairs, curves)]
    return render.line_chart(series, "number of crystals m", "P1 (SNR >= 10)", title, log_x=True,
                             hline=(f"faint laser {fl_p1:.3f}", fl_p1))


def _grid_panel(grid, title):
    return {"values": grid.values, "x_axis": grid.eta_axis, "y_axis": grid.gamma_axis, "title": title}


def reproduce(
    outdir,
    seed: int = 1,
    grid: int = 101,
    trials: int = 200_000,
    pairs: Sequence[tuple[float, float]] = DEFAULT_PAIRS,
    workers: int = 1,
) -> dict:
    """Write every figure dataset into ``outdir`` and return the manifest.

    Raises ``OSError`` when the target has less than 1 GiB free.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if shutil.disk_usage(outdir).free < MIN_FREE_BYTES:
        raise OSError(f"less than 1 GiB free under {outdir}")
    pairs = tuple((float(e), float(g)) for e, g in pairs)
    effs = [Efficiencies(e, g) for e, g in pairs]
    bundle = _Bundle(outdir)
    fl = p1_max(FaintLaser(1.0), Efficiencies(), THETA)

    # Fig. 2: index versus guaranteed SNR, lossless sources
    rows = fig2_rows()
    bundle.write("fig2.csv", _csv(["scheme", "m", "theta", "p1", "mu_star", "snr"],
                                  [(s, m, fmt(t), fmt(p), fmt(u), fmt(r)) for s, m, t, p, u, r in rows]))
    series = []
    for label, m in [("faint laser", 1)] + [(f"MHPS m={m}", m) for m in FIG2_MS]:
        sel = [r for r in rows if r[1] == m]
        series.append((label, [r[2] for r in sel], [r[3] for r in sel]))
    bundle.write("fig2.svg", render.line_chart(series, "guaranteed SNR", "P1", "Lossless multiplexing", log_x=True))

    # Figs. 4-5: scalability in m
    header = ["eta", "gamma", "m", "p1", "mu_star", "snr"]
    amhps = scalability_curves("asymmetric", THETA, effs, range(2, 257))
    bundle.write("fig4.csv", _csv(header, _curve_rows(pairs, amhps)))
    bundle.write("fig4.svg", _curve_svg(pairs, amhps, "Asymmetric chain", fl.p1_bar))
    smhps = scalability_curves("symmetric", THETA, effs, [2 ** k for k in range(1, 9)])
    bundle.write("fig5.csv", _csv(header, _curve_rows(pairs, smhps)))
    bundle.write("fig5.svg", _curve_svg(pairs, smhps, "Symmetric tree", fl.p1_bar))

    # Figs. 6-8: contour grids
    ax = axis(grid)
    grids = {}
    for m in (4, 8):
        sym = contour_grid("p1_symmetric_best", THETA, m, ax, ax, workers)
        asym = contour_grid("p1_asymmetric", THETA, m, ax, ax, workers)
        grids[m] = (sym, asym)
        fig = {4: "fig6", 8: "fig7"}[m]
        bundle.write(f"{fig}_symmetric_m{m}.csv", sym.to_csv())
        bundle.write(f"{fig}_asymmetric_m{m}.csv", asym.to_csv())
        bundle.write(f"{fig}.svg", render.heatmaps(
            [_grid_panel(sym, f"best symmetric, m' <= {m}"), _grid_panel(asym, f"asymmetric, m = {m}")],
            "eta", "gamma", P1_LEVELS, "P1"))
    delta4 = delta_from(grids[4][1], grids[4][0])
    delta32 = contour_grid("delta", THETA, 32, ax, ax, workers)
    bundle.write("fig8_delta_m4.csv", delta4.to_csv())
    bundle.write("fig8_delta_m32.csv", delta32.to_csv())
    bundle.write("fig8.svg", render.heatmaps(
        [_grid_panel(delta4, "delta, m = 4"), _grid_panel(delta32, "delta, m = 32")],
        "eta", "gamma", DELTA_LEVELS, "delta %"))

    # Fig. 9: two lossless crystals with independent pumps
    mu1_star, mu2_star, p1_star = two_crystal_ideal_opt()
    ax9, values = fig9_grid()
    bundle.write("fig9.csv", _csv(["mu1", "mu2", "p1"], [
        (fmt(a), fmt(b), fmt(values[i, j])) for i, a in enumerate(ax9) for j, b in enumerate(ax9)
    ]))
    bundle.write("fig9.svg", render.heatmaps(
        [{"values": values, "x_axis": tuple(ax9), "y_axis": tuple(ax9), "title": "two crystals",
          "lines": [((0.0, 3.0), (0.0, 3.0))], "markers": [(mu1_star, mu2_star)]}],
        "mu1", "mu2", (0.3, 0.4, 0.45, 0.5, 0.52), "P1"))

    # seeded Monte Carlo spot check of the lossy schemes at the reported hardware figures
    eff = Efficiencies(0.62, 0.5)
    spot = []
    for i, arch in enumerate((Asymmetric(4, 0.2), Symmetric(2, 0.2))):
        channels = expand(arch, eff)
        est = simulate(channels, eff, trials, seed + i, workers=workers)
        exact = general_distribution(channels, eff, n_max=8).probs
        spot.append({"scheme": to_dict(arch), "eta": eff.eta, "gamma": eff.gamma,
                     "estimate": est.to_dict(), "exact": list(exact[:9])})
    bundle.write("mc_spotcheck.json", json.dumps(spot, indent=2, sort_keys=True) + "\n")

    manifest = {
        "parameters": {
            "theta": THETA,
            "seed": seed,
            "grid": grid,
            "trials": trials,
            "pairs": [list(p) for p in pairs],
            "fig2_thetas": [FIG2_THETAS[0], FIG2_THETAS[-1], len(FIG2_THETAS)],
            "fig2_m": list(FIG2_MS),
            "fig4_m": [2, 256],
            "fig5_m": [2 ** k for k in range(1, 9)],
            "fig6_m": 4,
            "fig7_m": 8,
            "fig8_m": [4, 32],
        },
        "faint_laser_p1": fl.p1_bar,
        "two_crystal_optimum": {"mu1": mu1_star, "mu2": mu2_star, "p1": p1_star},
        "files": dict(sorted(bundle.files.items())),
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
