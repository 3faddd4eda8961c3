import math

import numpy as np
import pytest

from photon_mux.analytic import general_distribution
from photon_mux.arch import Asymmetric, ChannelSpec, Efficiencies, Symmetric, expand
from photon_mux.simulate import (
    CHUNK,
    THREADS_ENV,
    compare,
    default_workers,
    run_validation,
    simulate,
    trigger_law,
    validate_case,
    validation_cases,
)


CH = [ChannelSpec(0.4, 1), ChannelSpec(0.8, 2), ChannelSpec(0.8, 2)]
EFF = Efficiencies(0.6, 0.5)


def test_same_seed_same_counts_any_worker_count():
    a = simulate(CH, EFF, 3 * CHUNK + 17, seed=5, workers=1)
    b = simulate(CH, EFF, 3 * CHUNK + 17, seed=5, workers=4)
    assert a == b
    assert sum(a.counts) == a.n_trials == sum(a.chi_hist)


def test_seed_changes_the_draw():
    assert simulate(CH, EFF, 20000, seed=1).counts != simulate(CH, EFF, 20000, seed=2).counts


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert default_workers() == 3
    monkeypatch.setenv(THREADS_ENV, "junk")
    assert default_workers() == 1


def test_estimate_matches_exact_law():
    est = simulate(CH, EFF, 400_000, seed=11)
    exact = general_distribution(CH, EFF, n_max=8).probs
    checks = compare(est, exact, CH, EFF.eta)
    assert all(c.ok for c in checks), [c for c in checks if not c.ok]


def test_compare_flags_a_wrong_law():
    est = simulate(CH, EFF, 400_000, seed=11)
    wrong = general_distribution(CH, Efficiencies(0.6, 0.55), n_max=8).probs
    assert not all(c.ok for c in compare(est, wrong, CH, EFF.eta))


def test_trigger_law_is_a_distribution():
    law = trigger_law(CH, 0.6)
    assert math.fsum(law) == pytest.approx(1.0, abs=1e-15)
    assert law[0] == pytest.approx(math.exp(-0.6 * 2.0))
    assert trigger_law(CH, 0.0) == [1.0, 0.0, 0.0, 0.0]


def test_no_heralding_means_channel_one_always():
    est = simulate(CH, Efficiencies(0.0, 0.5), 50_000, seed=3)
    assert est.chi_hist == (50_000, 0, 0, 0)


def test_overflow_bin_collects_large_counts():
    est = simulate([ChannelSpec(30.0, 0)], Efficiencies(1.0, 1.0), 1000, seed=0, n_cap=4)
    assert est.overflow > 0.99
    assert len(est.p_hat) == 5


@pytest.mark.parametrize("kw", [dict(n_cap=1), dict(n_trials=0)])
def test_bad_arguments(kw):
    args = dict(channels=CH, eff=EFF, n_trials=10, seed=0)
    args.update(kw)
    with pytest.raises(ValueError):
        simulate(**args)


def test_validation_grid_shape():
    cases = validation_cases()
    assert len(cases) == 48
    assert {c[1].eta for c in cases} >= {0.0, 1.0}


def test_small_validation_run_passes():
    cases = [(Symmetric(2, 0.3), Efficiencies(0.3, 0.8)), (Asymmetric(5, 0.2), Efficiencies(1.0, 0.3))]
    reports = run_validation(200_000, seed=7, cases=cases)
    assert all(r.ok for r in reports)
    assert reports[0].to_dict()["scheme"]["scheme"] == "symmetric"


def test_report_serialises():
    r = validate_case(Asymmetric(3, 0.2), Efficiencies(0.5, 0.5), 10_000, seed=1)
    d = r.to_dict()
    assert set(d) == {"scheme", "eta", "gamma", "ok", "checks"}
    assert len(d["checks"]) == 5 + 4
