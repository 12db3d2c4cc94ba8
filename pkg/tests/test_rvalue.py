import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

import prrr.rvalue as rvalue
from prrr.core import DUMMY, Report, RandomString, oracle_digest, report_payload_digest
from prrr.rvalue import (
    LogarithmicSpec,
    PolarizedSpec,
    PropertyCheckConfig,
    check_reward_monotonicity,
    check_skipping_resistance,
    contract_cost_monte_carlo_stats,
    crosscheck_closed_forms,
    expected_contract_cost,
    harmonic,
    rallpub_closed_form,
    rallpub_monte_carlo,
    rallpub_monte_carlo_stats,
    rv_eval,
)

S = RandomString(value=oracle_digest(b"s"), proof=b"")
RPT = Report(0, 0, report_payload_digest(0))


def stub_oracle(monkeypatch, value):
    monkeypatch.setattr(rvalue, "oracle_uniform", lambda data: value)


def test_spec_validation():
    with pytest.raises(ValueError):
        LogarithmicSpec(lam=0.0, r_min=2.0)
    with pytest.raises(ValueError):
        LogarithmicSpec(lam=1.0, r_min=-1.0)
    with pytest.raises(ValueError):
        PolarizedSpec(p=0.0, r_min=2.0, r_max=10.0)
    with pytest.raises(ValueError):
        PolarizedSpec(p=1.5, r_min=2.0, r_max=10.0)
    with pytest.raises(ValueError):
        PolarizedSpec(p=0.1, r_min=2.0, r_max=2.0)
    PolarizedSpec(p=1.0, r_min=0.0, r_max=1.0)


def test_rv_eval_log_at_zero(monkeypatch):
    stub_oracle(monkeypatch, 0.0)
    assert rv_eval(LogarithmicSpec(1.0, 2.0), RPT, S) == 2.0


def test_rv_eval_log_analytic_inverse(monkeypatch):
    stub_oracle(monkeypatch, 1.0 - math.exp(-1.0))
    assert rv_eval(LogarithmicSpec(1.0, 2.0), RPT, S) == pytest.approx(3.0, abs=1e-12)


def test_rv_eval_polarized_boundary_inclusive(monkeypatch):
    spec = PolarizedSpec(p=0.1, r_min=2.0, r_max=10.0)
    stub_oracle(monkeypatch, 0.10)
    assert rv_eval(spec, RPT, S) == 10.0
    stub_oracle(monkeypatch, 0.1000001)
    assert rv_eval(spec, RPT, S) == 2.0


def test_rv_eval_dummy_is_floor():
    assert rv_eval(LogarithmicSpec(1.0, 2.0), DUMMY, S) == 2.0
    assert rv_eval(PolarizedSpec(0.1, 3.0, 10.0), DUMMY, S) == 3.0


@given(st.integers(min_value=0, max_value=1 << 62))
def test_rv_eval_log_above_floor(nonce):
    spec = LogarithmicSpec(0.7, 2.0)
    rpt = Report(0, 0, report_payload_digest(nonce))
    assert rv_eval(spec, rpt, S) >= spec.r_min


@given(st.integers(min_value=0, max_value=1 << 62))
def test_rv_eval_polarized_two_outcomes(nonce):
    spec = PolarizedSpec(0.3, 2.0, 9.0)
    rpt = Report(0, 0, report_payload_digest(nonce))
    assert rv_eval(spec, rpt, S) in (2.0, 9.0)


def test_rallpub_closed_form_log_constant():
    spec = LogarithmicSpec(0.5, 2.0)
    assert rallpub_closed_form(spec, 7) == 2.0
    assert all(rallpub_closed_form(spec, n) == 2.0 for n in (1, 2, 10, 100))


def test_rallpub_closed_form_polarized():
    spec = PolarizedSpec(p=0.1, r_min=2.0, r_max=12.0)
    assert rallpub_closed_form(spec, 2) == pytest.approx(2 * 0.1 * 0.9 * 10.0)
    assert rallpub_closed_form(spec, 1) == pytest.approx(1.0)


def test_rallpub_closed_form_rejects_zero():
    with pytest.raises(ValueError):
        rallpub_closed_form(LogarithmicSpec(1.0, 2.0), 0)


def test_expected_contract_cost_log():
    spec = LogarithmicSpec(1.0, 2.0)
    assert expected_contract_cost(spec, 1) == pytest.approx(3.0)
    assert expected_contract_cost(spec, 4) == pytest.approx(2.0 + 25.0 / 12.0)


def test_expected_contract_cost_polarized():
    spec = PolarizedSpec(p=0.1, r_min=2.0, r_max=10.0)
    assert expected_contract_cost(spec, 3) == pytest.approx(2.0 + (1 - 0.729) * 8.0)


def test_harmonic_direct_sum():
    assert harmonic(1) == 1.0
    assert harmonic(4) == pytest.approx(25.0 / 12.0)


def test_monotonicity_log_always_holds():
    res = check_reward_monotonicity(LogarithmicSpec(2.0, 2.0), PropertyCheckConfig(n_max=100))
    assert res.holds and res.witness is None
    assert all(v == 0.5 for v in res.curve)


def test_monotonicity_polarized_small_p_holds():
    res = check_reward_monotonicity(
        PolarizedSpec(p=0.01, r_min=2.0, r_max=10.0), PropertyCheckConfig(n_max=100)
    )
    assert res.holds


def test_monotonicity_polarized_large_p_witness():
    res = check_reward_monotonicity(
        PolarizedSpec(p=0.5, r_min=2.0, r_max=10.0), PropertyCheckConfig(n_max=10)
    )
    assert not res.holds
    assert res.witness == (2, 3)
    # Independent check of the witness against the payout formula.
    spread = 8.0
    assert 2 * 0.5 * 0.5 * spread >= 1 * 0.5 * spread  # (1, 2) not a violation
    assert 3 * 0.5 * 0.25 * spread < 2 * 0.5 * 0.5 * spread  # (2, 3) is


def test_skipping_resistance_log():
    assert check_skipping_resistance(LogarithmicSpec(1.0, 2.0), PropertyCheckConfig(n_max=50)).holds
    res = check_skipping_resistance(LogarithmicSpec(0.4, 2.0), PropertyCheckConfig(n_max=50))
    assert not res.holds
    assert res.witness == 1  # 1/lambda = 2.5 >= 2 from the first count on


def test_skipping_resistance_polarized_tuned_ceiling():
    n_max = 20
    p = 1.0 / n_max
    r_min = 2.0
    bound = (1.0 + 1.0 / (n_max * p * (1 - p) ** (n_max - 1))) * r_min
    spec = PolarizedSpec(p=p, r_min=r_min, r_max=0.99 * bound)
    cfg = PropertyCheckConfig(n_max=n_max)
    assert check_skipping_resistance(spec, cfg).holds
    assert check_reward_monotonicity(spec, cfg).holds


def test_skipping_resistance_implies_pointwise_bound():
    spec = LogarithmicSpec(1.0, 2.0)
    cfg = PropertyCheckConfig(n_max=64)
    res = check_skipping_resistance(spec, cfg)
    assert res.holds
    for n in range(1, cfg.n_max + 1):
        assert rallpub_closed_form(spec, n) < spec.r_min


def test_rallpub_monte_carlo_matches_closed_form_log():
    spec = LogarithmicSpec(1.0, 2.0)
    est = rallpub_monte_carlo_stats(spec, 5, 200_000, seed=7)
    assert est.within(1.0)
    assert abs(est.mean - 1.0) < 0.01 * 3


def test_rallpub_monte_carlo_matches_closed_form_polarized():
    spec = PolarizedSpec(p=0.05, r_min=2.0, r_max=10.0)
    est = rallpub_monte_carlo_stats(spec, 10, 200_000, seed=7)
    assert est.within(rallpub_closed_form(spec, 10))


def test_rallpub_monte_carlo_three_sigma_grid():
    log_spec = LogarithmicSpec(1.0, 2.0)
    pol_spec = PolarizedSpec(p=0.05, r_min=2.0, r_max=10.0)
    for spec in (log_spec, pol_spec):
        rows = crosscheck_closed_forms(spec, PropertyCheckConfig(mc_trials=120_000, seed=13))
        assert all(row.agrees for row in rows), rows


def test_contract_cost_monte_carlo_three_sigma():
    log_spec = LogarithmicSpec(1.0, 2.0)
    pol_spec = PolarizedSpec(p=0.05, r_min=2.0, r_max=10.0)
    for spec in (log_spec, pol_spec):
        for n in (1, 2, 3, 5, 10, 50):
            est = contract_cost_monte_carlo_stats(spec, n, 120_000, seed=17 + n)
            assert est.within(expected_contract_cost(spec, n)), (spec, n, est)


def test_monte_carlo_single_trial_reproducible():
    spec = LogarithmicSpec(1.0, 2.0)
    a = rallpub_monte_carlo(spec, 3, 1, seed=42)
    b = rallpub_monte_carlo(spec, 3, 1, seed=42)
    assert a == b
    assert rallpub_monte_carlo(spec, 3, 1, seed=43) != a


def test_single_report_gap_is_exponential():
    spec = LogarithmicSpec(0.8, 2.0)
    import numpy as np

    rng = np.random.default_rng(3)
    samples = rvalue._sample_values(spec, rng, 100_000, 1)[:, 0] - spec.r_min
    result = stats.kstest(samples, "expon", args=(0.0, 1.0 / spec.lam))
    assert result.pvalue > 0.01


def test_oracle_path_matches_exponential_too():
    # The hash-based evaluation path must produce the same distribution the
    # vectorized sampler assumes.
    spec = LogarithmicSpec(1.0, 2.0)
    samples = [
        rv_eval(spec, Report(0, 0, report_payload_digest(i)), S) - spec.r_min
        for i in range(100_000)
    ]
    result = stats.kstest(samples, "expon", args=(0.0, 1.0))
    assert result.pvalue > 0.01


def test_property_check_config_validation():
    with pytest.raises(ValueError):
        PropertyCheckConfig(n_max=0)
    with pytest.raises(ValueError):
        PropertyCheckConfig(mc_trials=0)
    with pytest.raises(ValueError):
        PropertyCheckConfig(tolerance=0.0)
