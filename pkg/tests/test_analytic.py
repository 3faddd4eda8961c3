import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.stats import binom, poisson

from photon_mux.analytic import (
    amhps_pn,
    distribution,
    fl_snr,
    general_distribution,
    general_pn,
    mhps_pn,
    poisson_pmf,
    smhps_gain,
    smhps_pn,
    smhps_snr_closed,
    snr_of,
)
from photon_mux.arch import (
    Asymmetric,
    ChannelSpec,
    Efficiencies,
    FaintLaser,
    General,
    IdealMHPS,
    Symmetric,
    expand,
)


def brute_force_pn(channels, eff, n, cutoff=80):
    """Sum over pair numbers of every channel, straight from the event model."""
    pairs = np.arange(cutoff + 1)
    herald_miss = (1 - eff.eta) ** pairs
    no_herald = []
    routed_fire, routed_dark = [], []
    for c in channels:
        w = poisson.pmf(pairs, c.mu)
        out = binom.pmf(n, pairs, eff.gamma**c.k)
        no_herald.append(np.sum(w * herald_miss))
        routed_fire.append(np.sum(w * (1 - herald_miss) * out))
        routed_dark.append(np.sum(w * herald_miss * out))
    total = routed_dark[0] * np.prod(no_herald[1:])
    for i in range(len(channels)):
        total += routed_fire[i] * np.prod(no_herald[:i])
    return float(total)


# ---------------------------------------------------------------- oracles


def test_faint_laser_single_pulse_values():
    d = distribution(FaintLaser(1.0), Efficiencies())
    assert d.p1 == pytest.approx(math.exp(-1), abs=1e-15)
    assert d.snr == pytest.approx(1 / (math.e - 2), rel=1e-13)


def test_fl_snr_closed_form():
    # mu e^-mu / (1 - e^-mu - mu e^-mu) at mu = 2 is 2 / (e^2 - 3)
    assert fl_snr(2.0) == pytest.approx(2 / (math.e**2 - 3), rel=1e-14)
    assert fl_snr(1.0) == pytest.approx(1 / (math.e - 2), rel=1e-14)


@pytest.mark.parametrize("mu", [1e-9, 0.99999e-4, 1.00001e-4, 3e-4])
def test_fl_snr_small_pump_expansion(mu):
    # both sides of the series switch agree with 2/mu - 2/3 + mu/18
    assert fl_snr(mu) == pytest.approx(2 / mu - 2 / 3 + mu / 18, rel=1e-9)


@pytest.mark.parametrize("mu,n", [(0.3, 0), (0.3, 1), (2.5, 4), (40.0, 38), (1e-3, 7)])
def test_poisson_pmf_matches_scipy(mu, n):
    assert poisson_pmf(mu, n) == pytest.approx(poisson.pmf(n, mu), rel=1e-12)


def test_mhps_single_crystal_is_poisson():
    for n in range(6):
        assert mhps_pn(1, 0.7, n) == pytest.approx(poisson.pmf(n, 0.7), rel=1e-13)


def test_mhps_matches_ideal_scheme():
    eff = Efficiencies(1.0, 1.0)
    d = distribution(IdealMHPS(4, 0.4), eff, n_max=8)
    for n in range(9):
        assert d.probs[n] == pytest.approx(mhps_pn(4, 0.4, n), rel=1e-12)


@pytest.mark.parametrize(
    "channels,eta,gamma",
    [
        ([(0.3, 1), (0.5, 2), (0.2, 2)], 0.6, 0.7),
        ([(1.2, 0)], 0.3, 0.5),
        ([(0.05, 3), (2.0, 1)], 1.0, 0.9),
        ([(0.4, 2), (0.4, 2), (0.4, 2), (0.4, 2)], 0.0, 0.5),
        ([(0.8, 1), (0.1, 0), (1.5, 4)], 0.85, 1.0),
    ],
)
def test_general_pn_against_brute_force(channels, eta, gamma):
    ch = [ChannelSpec(mu, k) for mu, k in channels]
    eff = Efficiencies(eta, gamma)
    for n in range(7):
        assert general_pn(ch, eff, n) == pytest.approx(brute_force_pn(ch, eff, n), rel=1e-10, abs=1e-300)


def test_closed_forms_against_brute_force():
    eff = Efficiencies(0.62, 0.5)
    for n in range(5):
        want_s = brute_force_pn(expand(Symmetric(2, 0.2), eff), eff, n)
        want_a = brute_force_pn(expand(Asymmetric(4, 0.2), eff), eff, n)
        assert smhps_pn(2, 0.2, eff, n) == pytest.approx(want_s, rel=1e-10)
        assert amhps_pn(4, 0.2, eff, n) == pytest.approx(want_a, rel=1e-10)


def test_smhps_snr_closed_matches_distribution():
    for k, mu, eta, gamma in [(1, 0.3, 0.6, 0.5), (3, 0.1, 0.9, 0.8), (0, 1.0, 0.4, 0.2), (5, 0.05, 1.0, 0.95)]:
        eff = Efficiencies(eta, gamma)
        assert smhps_snr_closed(k, mu, eff) == pytest.approx(snr_of(distribution(Symmetric(k, mu), eff)), rel=1e-11)


def test_gain_reference_points():
    # evaluated from the closed form: equal to one at gamma = 0.4 for deep trees,
    # above one at gamma = 1/2 and blowing up beyond it
    assert smhps_gain(60, 1.0, Efficiencies(0.8, 0.4)) == pytest.approx(1.0, abs=1e-6)
    assert smhps_gain(60, 1.0, Efficiencies(0.8, 0.5)) == pytest.approx(1.65, abs=0.01)
    assert smhps_gain(40, 1.0, Efficiencies(0.8, 0.6)) > 1000
    assert smhps_gain(5, 1.0, Efficiencies(0.0, 0.6)) == 1.0


def test_chain_total_exposure_near_unit_gamma():
    eff = Efficiencies(1.0, 1.0 - 2**-53)
    assert amhps_pn(1, 1.0, eff, 1) == pytest.approx(math.exp(-1), rel=1e-12)
    assert amhps_pn(3, 0.5, eff, 2) == pytest.approx(amhps_pn(3, 0.5, Efficiencies(1.0, 1.0), 2), rel=1e-12)


def test_huge_compensation_stays_finite():
    eff = Efficiencies(0.9, 0.3)
    d = distribution(Asymmetric(256, 0.2), eff, n_max=6)
    assert all(math.isfinite(p) and 0 <= p <= 1 for p in d.probs)
    for n in range(7):
        assert d.probs[n] == pytest.approx(amhps_pn(256, 0.2, eff, n), rel=1e-12)


def test_n_max_validation():
    with pytest.raises(ValueError):
        general_distribution([ChannelSpec(0.1, 0)], Efficiencies(), n_max=1)


def test_zero_pump_gives_vacuum_and_infinite_snr():
    d = distribution(Asymmetric(3, 0.0), Efficiencies(0.5, 0.5))
    assert d.p0 == 1.0 and d.p1 == 0.0
    assert d.snr == math.inf


# ---------------------------------------------------------------- properties

probabilities = st.floats(0.0, 1.0)
gammas = st.floats(0.05, 1.0)
pumps = st.floats(1e-4, 3.0)
channel_lists = st.lists(st.tuples(st.floats(1e-4, 5.0), st.integers(0, 8)), min_size=1, max_size=6)


@settings(max_examples=200, deadline=None)
@given(channel_lists, probabilities, gammas)
def test_distribution_is_normalised_and_consistent(channels, eta, gamma):
    ch = [ChannelSpec(mu, k) for mu, k in channels]
    eff = Efficiencies(eta, gamma)
    d = general_distribution(ch, eff, n_max=60)
    assert all(0.0 <= p <= 1.0 for p in d.probs)
    assert math.fsum(d.probs) == pytest.approx(1.0, abs=1e-12)
    assert d.p_multi == pytest.approx(1.0 - d.p0 - d.p1, abs=1e-13)
    assert d.p_multi >= 0


@settings(max_examples=100, deadline=None)
@given(channel_lists, gammas)
def test_no_heralding_routes_channel_one(channels, gamma):
    ch = [ChannelSpec(mu, k) for mu, k in channels]
    mu1 = ch[0].mu * gamma ** ch[0].k
    for n in range(5):
        assert general_pn(ch, Efficiencies(0.0, gamma), n) == pytest.approx(poisson.pmf(n, mu1), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 64), pumps)
def test_perfect_lossless_crystals_match_mhps(m, mu):
    d = distribution(IdealMHPS(m, mu), Efficiencies(1.0, 1.0), n_max=6)
    for n in range(7):
        assert d.probs[n] == pytest.approx(mhps_pn(m, mu, n), rel=1e-11, abs=1e-300)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 6), pumps, probabilities, gammas)
def test_symmetric_closed_form_matches_general(k, mu, eta, gamma):
    eff = Efficiencies(eta, gamma)
    ch = expand(Symmetric(k, mu), eff, max_pump=None)
    for n in range(5):
        want = general_pn(ch, eff, n)
        assume(want > 1e-250)
        assert smhps_pn(k, mu, eff, n) == pytest.approx(want, rel=1e-11)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 20), pumps, probabilities, gammas)
def test_asymmetric_closed_form_matches_general(m, mu, eta, gamma):
    eff = Efficiencies(eta, gamma)
    ch = expand(Asymmetric(m, mu), eff, max_pump=None)
    for n in range(5):
        want = general_pn(ch, eff, n)
        assume(want > 1e-250)
        assert amhps_pn(m, mu, eff, n) == pytest.approx(want, rel=1e-11)
