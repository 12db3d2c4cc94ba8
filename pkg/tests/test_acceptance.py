"""Acceptance suite: one test per criterion, one pass/fail line each.

Tolerances are pinned here, not tuned elsewhere: exact equality for the
golden settlement matrix and the algebraic identities, 1% relative error
for the constant-payout Monte Carlo, and three standard errors for every
sampled comparison.  Run with ``pytest -s tests/test_acceptance.py`` to see
the per-criterion lines.
"""

import json
import time
from contextlib import contextmanager

import pytest

from prrr.analysis.collusion import (
    check_pub_val_collusion,
    check_sybil_proofness,
    compare_coalition_traces,
)
from prrr.analysis.deviations import BribeToReorder, BribeToSkip, WithholdSubset, strategy_for_group
from prrr.analysis.impossibility import FixedBountyBaseline, impossibility_demo
from prrr.analysis.spne import verify_spne
from prrr.analysis.stability import validator_strictness_sweep
from prrr.cli import main
from prrr.game import GameConfig, honest_profile, simulate_epochs
from prrr.protocol import EpochConfig
from prrr.rvalue import (
    LogarithmicSpec,
    PolarizedSpec,
    PropertyCheckConfig,
    check_reward_monotonicity,
    check_skipping_resistance,
    contract_cost_monte_carlo_stats,
    expected_contract_cost,
    rallpub_closed_form,
    rallpub_monte_carlo_stats,
)

LOG_SPEC = LogarithmicSpec(lam=1.0, r_min=2.0)
POL_SPEC = PolarizedSpec(p=0.05, r_min=2.0, r_max=10.0)


@contextmanager
def criterion(label):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {label}: FAIL")
        raise
    print(f"ACCEPTANCE {label}: PASS")


def desk_cfg(lam=1.0, publishers=((0, 2), (1, 2)), t_total=2, seed=0):
    return GameConfig(
        epoch=EpochConfig(t_total=t_total, t_pub=1, spec=LogarithmicSpec(lam, 2.0)),
        publishers=publishers,
        seed=seed,
    )


def test_criterion_1_table1_golden_suite(capsys, tmp_path):
    with criterion("1 (golden settlement matrix)"):
        started = time.perf_counter()
        code = main(["table1", "--out", str(tmp_path)])
        elapsed = time.perf_counter() - started
        assert code == 0
        rows = json.loads((tmp_path / "table1.json").read_text())
        assert [row["validator"] for row in rows] == [8.0, 2.0, 0.0, 0.0, 0.0]
        winners = [max(row[key] for key in "ABC") for row in rows]
        assert winners == [2.0, 8.0, 8.0, 6.0, 8.0]
        assert elapsed < 1.0


def test_criterion_2_log_payout_constant():
    with criterion("2 (logarithmic payout is 1/lambda)"):
        started = time.perf_counter()
        for n in (2, 5, 10, 100):
            est = rallpub_monte_carlo_stats(LOG_SPEC, n, 1_000_000, seed=100 + n)
            assert abs(est.mean - 1.0) <= 0.01, (n, est)
        assert time.perf_counter() - started < 30.0


def test_criterion_3_polarized_payout_formula():
    with criterion("3 (polarized payout formula)"):
        for n in (1, 2, 10, 20):
            est = rallpub_monte_carlo_stats(POL_SPEC, n, 1_000_000, seed=200 + n)
            assert est.within(rallpub_closed_form(POL_SPEC, n), 3.0), (n, est)


def test_criterion_4_contract_cost():
    with criterion("4 (expected contract cost)"):
        for n in (2, 5, 10, 100):
            est = contract_cost_monte_carlo_stats(LOG_SPEC, n, 1_000_000, seed=300 + n)
            assert est.within(expected_contract_cost(LOG_SPEC, n), 3.0), (n, est)
        for n in (1, 2, 10, 20):
            est = contract_cost_monte_carlo_stats(POL_SPEC, n, 1_000_000, seed=400 + n)
            assert est.within(expected_contract_cost(POL_SPEC, n), 3.0), (n, est)


def test_criterion_5_property_checkers():
    with criterion("5 (property checkers, closed-form verdicts)"):
        cfg = PropertyCheckConfig(n_max=100)
        good = LogarithmicSpec(lam=1.0, r_min=2.0)  # lambda > 1/r_min
        assert check_reward_monotonicity(good, cfg).holds
        assert check_skipping_resistance(good, cfg).holds

        weak = LogarithmicSpec(lam=0.4, r_min=2.0)
        assert check_reward_monotonicity(weak, cfg).holds
        assert not check_skipping_resistance(weak, cfg).holds

        lumpy = PolarizedSpec(p=0.5, r_min=2.0, r_max=10.0)
        res = check_reward_monotonicity(lumpy, PropertyCheckConfig(n_max=10))
        assert not res.holds
        assert res.witness == (2, 3)

        # Deterministic: identical inputs give identical verdict objects.
        again = check_reward_monotonicity(lumpy, PropertyCheckConfig(n_max=10))
        assert res == again


def test_criterion_6_fairness_shares():
    with criterion("6 (fairness: proportional expected revenue)"):
        for k, n in ((1, 2), (1, 4), (2, 4), (3, 6)):
            cfg = desk_cfg(publishers=((0, k), (1, n - k)), t_total=3, seed=600 + n)
            summary = simulate_epochs(
                cfg, honest_profile(cfg), trials=100_000, seed=610 + 10 * n + k
            )
            expected = (k / n) * rallpub_closed_form(cfg.spec, n)
            est = summary.publisher[0]
            assert abs(est.mean - expected) <= 3 * est.std_error, (k, n, est, expected)


def test_criterion_7_efficiency_and_progress():
    with criterion("7 (efficiency and progress over 1e5 epochs)"):
        cfg = desk_cfg(t_total=3, seed=700)
        summary = simulate_epochs(cfg, honest_profile(cfg), trials=100_000, seed=701)
        assert summary.progress_failures == 0
        assert summary.efficiency_failures == 0
        assert summary.termination_histogram == {"1": 100_000}


def test_criterion_8_spne_grid_check():
    with criterion("8 (equilibrium sweep: clean pass, broken-parameter witness)"):
        started = time.perf_counter()
        clean = verify_spne(desk_cfg(lam=1.0), trials=25_000, seed=4)
        assert clean.verdict == "no_profitable_deviation"
        assert clean.epsilon_sigma == 3.0
        assert "grid" in clean.scope  # the verdict is labeled grid-relative

        broken = verify_spne(desk_cfg(lam=0.4), trials=30_000, seed=4)
        assert broken.verdict == "violation"
        witness = broken.best_deviation
        assert witness is not None
        assert witness.kind["kind"] == "BribeToSkip"
        assert witness.delta > 3 * witness.std_error
        elapsed = time.perf_counter() - started
        assert elapsed < 300.0, f"sweep took {elapsed:.0f}s"


def test_criterion_9_collusion_and_sybil():
    with criterion("9 (coalition identities, Sybil splits, validator collusion)"):
        # Exact revenue identities of the merged-publisher transform, over
        # honest and deviating seeded traces.
        cfg3 = desk_cfg(publishers=((0, 2), (1, 2), (2, 1)))
        scenarios = [
            honest_profile(cfg3),
            {**honest_profile(cfg3), **strategy_for_group(cfg3, (0,), WithholdSubset(kept=(0,)), 1)},
            {**honest_profile(cfg3), **strategy_for_group(cfg3, (0,), BribeToSkip(amount=2.5), 1)},
            {
                **honest_profile(cfg3),
                **strategy_for_group(cfg3, (1,), BribeToReorder(target=(0, -1), amount=1.5), 1),
            },
        ]
        per_scenario = 10_000 // len(scenarios)
        for i, strategies in enumerate(scenarios):
            comparison = compare_coalition_traces(
                cfg3, (0, 1), strategies, traces=per_scenario, seed=900 + i
            )
            assert comparison.exact, (i, comparison)

        sybil_cfg = desk_cfg(publishers=((0, 4), (1, 2)))
        for split in ((2, 2), (1, 1, 1, 1)):
            report = check_sybil_proofness(sybil_cfg, 0, split, trials=8_000, seed=910)
            assert report.honest_exact, split
            assert report.holds, (split, report.to_obj())

        pubval = check_pub_val_collusion(desk_cfg(), (0,), trials=2_000, seed=920)
        assert pubval.holds
        assert pubval.pointwise_violations == 0
        pubval_all = check_pub_val_collusion(desk_cfg(), (0, 1), trials=2_000, seed=921)
        assert pubval_all.holds
        assert pubval_all.pointwise_violations == 0


def test_criterion_10_validator_strictness():
    with criterion("10 (validator deviations strictly lose)"):
        assert validator_strictness_sweep(desk_cfg(), instances=1_000, seed=1000)


def test_criterion_11_impossibility_demo():
    with criterion("11 (symmetric-baseline bribery construction)"):
        single = impossibility_demo(2, FixedBountyBaseline(r_fix=10.0, v=1.0), 1)
        assert single.verdict == "profitable_deviation_found"
        assert single.swap_uniquely_optimal
        assert single.expected_gain == pytest.approx(20.0 / 3.0, abs=1e-12)

        spread = impossibility_demo(2, FixedBountyBaseline(r_fix=10.0, v=1.0), 4)
        assert spread.verdict == "profitable_deviation_found"
        assert spread.swap_uniquely_optimal
        assert spread.per_string_choice_unchanged
        assert spread.expected_gain == pytest.approx(10.0 / 12.0, abs=1e-12)
