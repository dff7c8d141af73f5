import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dmtkit.asymptotics import CapacityStats, high_snr_stats, theorem1_stats
from dmtkit.channels import KeyholeChannelSpec, exponential_correlation
from dmtkit.errors import BoundInvalidError, DomainError
from dmtkit.outage import (
    DiversityMethod,
    DmtCurve,
    DmtPoint,
    MuxGainDef,
    approx_outage_iid,
    convergence_threshold,
    differential_diversity,
    diversity_ratio,
    dmt_asymptote,
    dprime_closed_form,
    fit_snr_offset,
    gaussian_outage,
    gaussian_outage_bound,
    iid_log_outage_curve,
    keyhole_dmt,
    keyhole_log_outage_curve,
    log_q_function,
    outage_with_fallback,
    q_function,
    rate_from_mux,
)

MEAN, OFFSET, LOG = MuxGainDef.MEAN_FRACTION, MuxGainDef.LOG_SNR_OFFSET, MuxGainDef.LOG_SNR


def _q_oracle(x):
    with mp.workdps(40):
        return float(mp.erfc(mp.mpf(x) / mp.sqrt(2)) / 2)


# -- multiplexing-gain definitions ------------------------------------------
def test_parse_definitions():
    assert MuxGainDef.parse("LOG-SNR") is LOG
    assert MuxGainDef.parse(OFFSET) is OFFSET
    with pytest.raises(ValueError):
        MuxGainDef.parse("bogus")


def test_rate_examples():
    s = theorem1_stats(50.0, 4)
    assert rate_from_mux(MEAN, 4, 50.0, s, 4) == s.mean
    assert rate_from_mux(LOG, 9, 100.0) == pytest.approx(41.447, abs=1e-3)
    assert rate_from_mux(OFFSET, 2, 100.0) == pytest.approx(2 * (math.log(100) - 1))
    with pytest.raises(DomainError) as exc:
        rate_from_mux(OFFSET, 1, math.e)
    assert exc.value.definition == "log_snr_offset"
    with pytest.raises(DomainError):
        rate_from_mux(LOG, 1, 1.0)
    with pytest.raises(DomainError):
        rate_from_mux(MEAN, 3, 10.0, s, 2)
    with pytest.raises(DomainError):
        rate_from_mux(MEAN, 1, 10.0, CapacityStats(0.0, 1.0), 2)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 5.0), st.floats(3.0, 1e8))
def test_rates_positive(r, gamma):
    s = theorem1_stats(gamma, 5)
    for d in MuxGainDef:
        assert rate_from_mux(d, r, gamma, s, 5) > 0


# -- Gaussian outage and its bound ------------------------------------------
def test_gaussian_outage_examples():
    assert gaussian_outage(CapacityStats(3.0, 2.0), 3.0) == 0.5
    assert gaussian_outage(CapacityStats(2.0, 1.0), 1.0) == pytest.approx(0.158655, abs=1e-6)
    assert gaussian_outage(CapacityStats(2.0, 1.0), 3.0) == pytest.approx(0.841345, abs=1e-6)


def test_q_function_relative_accuracy():
    xs = np.concatenate([np.linspace(-8, 37, 451), [37.5]])
    for x in xs:
        assert q_function(x) == pytest.approx(_q_oracle(x), rel=1e-10, abs=0.0)


def test_log_q_tracks_deep_tail():
    for x in (1.0, 10.0, 30.0, 37.0):
        assert log_q_function(x) == pytest.approx(math.log(_q_oracle(x)), rel=1e-10)
    # far past underflow the log stays finite and follows -x^2/2 - ln(x sqrt(2 pi))
    x = 1e3
    assert log_q_function(x) == pytest.approx(-x * x / 2 - math.log(x * math.sqrt(2 * math.pi)), rel=1e-9)


def test_q_function_symmetry():
    xs = np.linspace(-6, 6, 121)
    np.testing.assert_allclose(q_function(xs) + q_function(-xs), 1.0, rtol=0, atol=1e-15)


def test_bound_examples():
    assert gaussian_outage_bound(CapacityStats(2.0, 1.0), 2.0) == 0.5
    assert gaussian_outage_bound(CapacityStats(2.0, 1.0), 1.0) == pytest.approx(0.5 * math.exp(-0.5), rel=1e-14)
    assert gaussian_outage_bound(CapacityStats(2.0, 1.0), 1.0) == pytest.approx(0.30327, abs=1e-5)
    with pytest.raises(BoundInvalidError):
        gaussian_outage_bound(CapacityStats(2.0, 1.0), 3.0)


def test_bound_dominance_grid():
    s = CapacityStats(5.0, 1.7)
    rates = np.linspace(-5.0, 5.0, 401)
    b = gaussian_outage_bound(s, rates)
    q = gaussian_outage(s, rates)
    assert np.all(b[:-1] > q[:-1])
    assert b[-1] == q[-1] == 0.5


def test_fallback_tags_the_route():
    s = CapacityStats(2.0, 1.0)
    assert outage_with_fallback(s, 1.0) == (pytest.approx(0.5 * math.exp(-0.5)), True)
    p, used = outage_with_fallback(s, 3.0)
    assert not used and p == pytest.approx(0.841345, abs=1e-6)


# -- diversity ---------------------------------------------------------------
def test_diversity_ratio_examples():
    assert diversity_ratio(1 / 50.0, 50.0) == pytest.approx(1.0)
    assert diversity_ratio(1e-4, 100.0) == pytest.approx(2.0)
    assert diversity_ratio(0.5, math.e) == pytest.approx(0.693, abs=1e-3)
    for bad in ((0.0, 10.0), (1.0, 10.0), (0.5, 1.0)):
        with pytest.raises(DomainError):
            diversity_ratio(*bad)


@settings(max_examples=80, deadline=None)
@given(st.floats(1e-6, 1e6), st.floats(0.0, 20.0), st.floats(1.5, 1e8))
def test_differential_diversity_exact_on_power_laws(c, d, gamma):
    assume(math.log(c) - d * math.log(gamma) < -0.1)  # a probability below 1 on the stencil
    curve = lambda g: math.log(c) - d * math.log(g)  # noqa: E731
    est = differential_diversity(curve, gamma, log_curve=True)
    assert est.value == pytest.approx(d, abs=1e-6)
    assert est.accurate


def test_differential_diversity_examples():
    assert differential_diversity(lambda g: 3.0 / g**2, 40.0).value == pytest.approx(2.0, abs=1e-6)
    assert differential_diversity(lambda g: 0.1, 40.0).value == 0.0
    with pytest.raises(DomainError):
        differential_diversity(lambda g: 0.0, 10.0)
    with pytest.raises(DomainError):
        differential_diversity(lambda g: 1.0, 10.0)
    curve = iid_log_outage_curve(10, 9, MEAN)
    d = differential_diversity(curve, 100.0, log_curve=True).value
    assert abs(d - 0.95) <= 0.1 * 0.95


def test_richardson_flag_catches_curvature():
    wiggle = lambda g: -math.log(g) + 0.3 * math.sin(40 * math.log(g))  # noqa: E731
    assert not differential_diversity(wiggle, 10.0, log_curve=True).accurate


def test_dmt_curve_refuses_mixed_methods():
    a = DmtPoint(10.0, 1.0, 0.9, DiversityMethod.NUMERIC_DIFFERENTIATION)
    b = DmtPoint(20.0, 1.0, 0.9, DiversityMethod.ANALYTIC_CLOSED_FORM)
    assert DmtCurve([a]).method is DiversityMethod.NUMERIC_DIFFERENTIATION
    with pytest.raises(ValueError):
        DmtCurve([a, b])


# -- closed forms --------------------------------------------------------------
def test_dmt_asymptote_examples():
    assert dmt_asymptote(0, 3, 4) == 12
    assert dmt_asymptote(3, 3, 4) == 0
    assert dmt_asymptote(0.5, 2, 2) == 2.5
    with pytest.raises(DomainError):
        dmt_asymptote(2.5, 2, 2)


def test_approx_outage_examples():
    a = approx_outage_iid(100.0, 10, 9)
    assert a.delta == pytest.approx(1 + 2 / (10 * math.log(100 / math.e)), rel=1e-14)
    assert a.delta == pytest.approx(1.0556, abs=2e-4)  # quoted rounded; exact 1.05548
    assert a.p_out == pytest.approx(0.5 * (100 / math.e) ** (-a.delta), rel=1e-12)
    assert a.p_out == pytest.approx(a.offset / 100.0**a.exponent, rel=1e-12)
    # the exponential route of the Gaussian formula with expansion moments
    s = high_snr_stats(100.0, 10)
    ref = gaussian_outage_bound(s, rate_from_mux(MEAN, 9, 100.0, s, 10))
    assert 0.5 <= a.p_out / ref <= 2.0
    far = approx_outage_iid(1e12, 4, 1)
    assert far.delta == pytest.approx(1.0, abs=1e-6)
    assert far.exponent == pytest.approx(9.0, abs=1e-4)
    assert approx_outage_iid(50.0, 3, 3).p_out == 0.5
    with pytest.raises(DomainError):
        approx_outage_iid(2.0, 3, 1)


def test_dprime_closed_examples():
    assert dprime_closed_form(MEAN, 100.0, 10, 9) == pytest.approx(0.95, rel=1e-14)
    expect = 1 - 3 / 10 - 1 / math.log(100 / math.e) ** 2
    assert dprime_closed_form(LOG, 100.0, 2, 1) == pytest.approx(expect, rel=1e-14)
    assert dprime_closed_form(LOG, 100.0, 2, 1) == pytest.approx(0.6231, abs=1e-4)
    assert dprime_closed_form(OFFSET, 100.0, 2, 1) == pytest.approx(0.7, rel=1e-14)
    for d in MuxGainDef:
        assert dprime_closed_form(d, 1e14, 3, 1) == pytest.approx(4.0, rel=1e-3)
        assert dprime_closed_form(d, 50.0, 3, 3) == 0.0
    with pytest.raises(DomainError):
        dprime_closed_form(OFFSET, 2.0, 3, 1)
    with pytest.raises(DomainError):
        dprime_closed_form(LOG, math.e, 3, 1)
    with pytest.raises(DomainError):
        dprime_closed_form(MEAN, 10.0, 3, 4)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 12), st.data(), st.floats(3.0, 1e9))
def test_dprime_definition_ordering(n, data, gamma):
    r = data.draw(st.floats(1.0, n - 0.01))
    lo = dprime_closed_form(LOG, gamma, n, r)
    mid = dprime_closed_form(OFFSET, gamma, n, r)
    hi = dprime_closed_form(MEAN, gamma, n, r)
    assert lo <= mid <= hi


def test_threshold_examples():
    for n, r in [(10, 9), (2, 1), (5, 0)]:
        t = convergence_threshold(MEAN, n, r)
        assert t.linear == pytest.approx(25.0)
        assert t.db == pytest.approx(13.98, abs=0.01)
    log = convergence_threshold(LOG, 10, 9)
    assert log.linear == pytest.approx(math.exp(28), rel=1e-12)
    assert log.db == pytest.approx(121.6, abs=0.05)
    off = convergence_threshold(OFFSET, 10, 9)
    assert off.linear == pytest.approx(36100.0, rel=1e-12)
    assert off.db == pytest.approx(45.58, abs=0.01)
    assert convergence_threshold(LOG, 2, 1).linear == pytest.approx(900.0)
    with pytest.raises(DomainError):
        convergence_threshold(MEAN, 3, 3)


@pytest.mark.parametrize("n", range(2, 16))
def test_threshold_ordering(n):
    for r in range(1, n):
        a = convergence_threshold(MEAN, n, r).linear
        b = convergence_threshold(OFFSET, n, r).linear
        c = convergence_threshold(LOG, n, r).linear
        assert a <= b <= c


def test_closed_form_meets_threshold_accuracy():
    # each subtracted correction term is at most ~10% at its threshold
    for n, r in [(2, 1), (10, 9), (6, 2)]:
        base = (n - r) ** 2
        for d in (MEAN, OFFSET):
            g = convergence_threshold(d, n, r).linear
            assert dprime_closed_form(d, g, n, r) >= 0.9 * base - 1e-9
        g = convergence_threshold(LOG, n, r).linear
        root_term = (n + r) / (n - r) / math.sqrt(g)
        log_term = (r / (n - r)) ** 2 / (math.log(g) - 1) ** 2
        assert root_term <= 0.1 + 1e-12
        assert log_term <= 1 / 9 + 1e-12  # the exp(1 + 3r/(n-r)) condition pins this at 1/9
        assert dprime_closed_form(LOG, g, n, r) == pytest.approx(base * (1 - root_term - log_term))


# -- anomalous region ------------------------------------------------------------
def _ln_p_grid(definition, db):
    curve = iid_log_outage_curve(10, 9, definition)
    return np.array([curve(10 ** (x / 10)) for x in db])


def test_anomalous_region_for_log_snr():
    db = np.arange(5.0, 25.01, 0.5)
    assert np.any(np.diff(_ln_p_grid(LOG, db)) > 0)


def test_mean_fraction_strictly_decreasing():
    db = np.arange(0.0, 40.01, 0.5)
    assert np.all(np.diff(_ln_p_grid(MEAN, db)) < 0)


# -- keyhole --------------------------------------------------------------------
def test_keyhole_dmt_examples():
    spec = KeyholeChannelSpec(10, 10)
    assert keyhole_dmt(10.0, spec, 1.0).dprime == 0.0
    assert keyhole_dmt(10.0, spec, 1.0).p_out == 0.5
    k = keyhole_dmt(10.0, spec, 0.5)
    assert k.dprime == pytest.approx(0.25 * math.log(100) / 0.2, rel=1e-14)
    assert k.dprime == pytest.approx(5.756, abs=1e-3)
    assert k.delta == pytest.approx(math.log(100) / 0.4, rel=1e-14)
    with pytest.raises(DomainError):
        keyhole_dmt(10.0, spec, 1.5)
    with pytest.raises(DomainError):
        keyhole_dmt(0.05, spec, 0.5)


def test_keyhole_dprime_decreases_with_correlation():
    for end in ("tx", "rx", "both"):
        vals = []
        for rho in np.arange(10) / 10:
            R = exponential_correlation(10, rho)
            kw = {"r_t": R} if end == "tx" else {"r_r": R} if end == "rx" else {"r_t": R, "r_r": R}
            vals.append(keyhole_dmt(10.0, KeyholeChannelSpec(10, 10, **kw), 0.5).dprime)
        assert all(b < a for a, b in zip(vals, vals[1:]))


def test_keyhole_dprime_symmetric_and_increasing():
    Rt, Rr = exponential_correlation(4, 0.6), exponential_correlation(6, 0.3)
    a = KeyholeChannelSpec(4, 6, Rt, Rr)
    b = KeyholeChannelSpec(6, 4, Rr, Rt)
    # the n in ln(n gamma) moves with the swap, so compare at equal n*gamma
    assert keyhole_dmt(5.0, a, 0.3).dprime == pytest.approx(keyhole_dmt(7.5, b, 0.3).dprime, rel=1e-14)
    vals = [keyhole_dmt(g, a, 0.3).dprime for g in np.logspace(0, 4, 30)]
    assert all(y > x for x, y in zip(vals, vals[1:]))


def test_keyhole_curve_feeds_numeric_derivative():
    spec = KeyholeChannelSpec(10, 10)
    d = differential_diversity(keyhole_log_outage_curve(spec, 0.5), 100.0, log_curve=True)
    assert d.value == pytest.approx(keyhole_dmt(100.0, spec, 0.5).dprime, rel=0.05)


# -- SNR offset ------------------------------------------------------------------
def test_fit_offset_exact_recovery():
    g = np.logspace(1, 5, 9)
    fit = fit_snr_offset(g, 5.0 / g**2, 2.0)
    assert fit.c == pytest.approx(5.0, abs=1e-6)
    fit = fit_snr_offset(g, np.log(5.0) - 2 * np.log(g), 2.0, log_p=True)
    assert fit.log_c == pytest.approx(math.log(5.0), abs=1e-12)
    with pytest.raises(ValueError):
        fit_snr_offset([10.0], [0.1], 1.0)
    with pytest.raises(DomainError):
        fit_snr_offset(g, 5.0 / g**2, 0.0)
