import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prrr.bribes import BribeSchedule, bribe_to_skip
from prrr.core import (
    DUMMY_ID,
    Report,
    ValidatorKeys,
    is_dummy,
    oracle_digest,
    report_payload_digest,
    vrf_generate,
)
from prrr.game import PublisherAction, StepContext, honest_action
from prrr.analysis.bestresponse import (
    ActionGrid,
    pivotal_grid,
    validator_best_response,
    validator_best_response_pruned,
)
from prrr.rvalue import LogarithmicSpec

SPEC = LogarithmicSpec(1.0, 2.0)
S = vrf_generate(oracle_digest(b"beacon"), ValidatorKeys.from_secret(oracle_digest(b"k")))
A = Report(0, 0, report_payload_digest(0))
B = Report(1, 1, report_payload_digest(1))
GRID = pivotal_grid(SPEC)


def stub(table):
    def value_fn(entry, s):
        return SPEC.r_min if is_dummy(entry) else table[entry.id]

    return value_fn


TWO = stub({0: 10.0, 1: 8.0})


def ctx_for(value_fn):
    return StepContext(spec=SPEC, value_of=value_fn, s=S)


def test_action_grid_validation():
    with pytest.raises(ValueError):
        ActionGrid(bribe_levels=(1.0,))
    with pytest.raises(ValueError):
        ActionGrid(bribe_levels=(0.0, -1.0))
    with pytest.raises(ValueError):
        ActionGrid(bribe_levels=(1.0, 0.0))
    grid = pivotal_grid(SPEC)
    assert 0.0 in grid.bribe_levels
    assert SPEC.r_min in grid.bribe_levels
    assert len(grid.bribe_levels) <= 5


def test_candidate_vectors_counts():
    grid = ActionGrid()
    reports = [A, B, Report(2, 0, report_payload_digest(2))]
    vectors = grid.candidate_vectors(reports)
    # 1 empty + 3 singletons + 6 ordered pairs + 6 ordered triples
    assert len(vectors) == 16
    assert () in vectors


def test_best_response_no_bribes_is_honest():
    actions = {0: honest_action(frozenset({A})), 1: honest_action(frozenset({B}))}
    br = validator_best_response(actions, S, SPEC, GRID, value_fn=TWO)
    assert br.key == (A.id, B.id)
    assert br.utility == 8.0


def test_best_response_skip_bribe_wins():
    actions = {
        0: PublisherAction(frozenset({A}), bribe_to_skip(9.0)),
        1: honest_action(frozenset({B})),
    }
    br = validator_best_response(actions, S, SPEC, GRID, value_fn=TWO)
    assert br.key == ()
    assert br.utility == 9.0


def test_best_response_tip_on_honest():
    actions = {
        0: PublisherAction(frozenset({A}), BribeSchedule({(A.id, B.id): 0.5})),
        1: honest_action(frozenset({B})),
    }
    br = validator_best_response(actions, S, SPEC, GRID, value_fn=TWO)
    assert br.key == (A.id, B.id)
    assert br.utility == 8.5


def test_best_response_tie_prefers_honest():
    # A bribe on the empty vector exactly matching the honest reward ties;
    # the honest vector must win.
    actions = {
        0: PublisherAction(frozenset({A}), bribe_to_skip(8.0)),
        1: honest_action(frozenset({B})),
    }
    br = validator_best_response(actions, S, SPEC, GRID, value_fn=TWO)
    assert br.key == (A.id, B.id)


def test_best_response_succinct_bribe():
    # Bribing onto the deviator's lone-report block beats honest only when
    # the offer exceeds the gap between the floor and the runner-up value.
    actions = {
        0: honest_action(frozenset({A})),
        1: PublisherAction(frozenset({B}), BribeSchedule({(B.id, DUMMY_ID): 6.5})),
    }
    br = validator_best_response(actions, S, SPEC, GRID, value_fn=TWO)
    assert br.key == (B.id, DUMMY_ID)
    assert br.utility == pytest.approx(2.0 + 6.5)


@st.composite
def bribed_instances(draw):
    n = draw(st.integers(min_value=0, max_value=4))
    reports = [Report(i, i % 2, report_payload_digest(i)) for i in range(n)]
    table = {
        r.id: draw(st.floats(min_value=0.0, max_value=15.0, allow_nan=False)) for r in reports
    }
    schedules = {}
    for pid in (0, 1):
        entries = {}
        n_entries = draw(st.integers(min_value=0, max_value=3))
        for _ in range(n_entries):
            shape = draw(st.sampled_from(["empty", "succinct", "pair", "triple"]))
            amount = draw(st.floats(min_value=0.0, max_value=12.0, allow_nan=False))
            ids = [r.id for r in reports]
            if shape == "empty":
                key = ()
            elif shape == "succinct" and ids:
                key = (draw(st.sampled_from(ids)), DUMMY_ID)
            elif shape == "pair" and len(ids) >= 2:
                a, b = draw(st.permutations(ids))[:2]
                key = (a, b)
            elif shape == "triple" and len(ids) >= 3:
                a, b, c = draw(st.permutations(ids))[:3]
                key = (a, DUMMY_ID, b, c)[:3]
            else:
                key = ()
            entries[key] = entries.get(key, 0.0) + amount
        schedules[pid] = BribeSchedule(entries)
    actions = {
        pid: PublisherAction(frozenset(r for r in reports if r.owner == pid), schedules[pid])
        for pid in (0, 1)
    }
    return actions, stub(table)


@settings(max_examples=120)
@given(bribed_instances())
def test_pruned_matches_exhaustive(case):
    actions, value_fn = case
    exhaustive = validator_best_response(actions, S, SPEC, GRID, value_fn=value_fn)
    pruned = validator_best_response_pruned(actions, ctx_for(value_fn), GRID)
    assert exhaustive.key == pruned.key
    assert exhaustive.utility == pytest.approx(pruned.utility, abs=1e-12)
