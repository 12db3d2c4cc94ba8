import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from prrr.core import (
    Block,
    RandomString,
    Report,
    ValidatorKeys,
    build_roster,
    derive_beacon,
    derive_seed,
    derive_validator_keys,
    oracle_digest,
    oracle_uniform,
    report_payload_digest,
    vrf_generate,
    vrf_verify,
)


@given(st.binary(min_size=1, max_size=200))
def test_oracle_uniform_deterministic_and_in_range(data):
    a = oracle_uniform(data)
    b = oracle_uniform(data)
    assert a == b
    assert 0.0 <= a < 1.0


def test_oracle_uniform_rejects_empty():
    with pytest.raises(ValueError):
        oracle_uniform(b"")


def test_oracle_uniform_mean_and_range_over_many_inputs():
    n = 1_000_000
    samples = [oracle_uniform(i.to_bytes(8, "big")) for i in range(n)]
    assert min(samples) >= 0.0
    assert max(samples) < 1.0
    assert abs(math.fsum(samples) / n - 0.5) <= 0.002


def test_oracle_uniform_ks_uniformity():
    samples = [oracle_uniform(b"ks" + i.to_bytes(8, "big")) for i in range(100_000)]
    result = stats.kstest(samples, "uniform")
    assert result.pvalue > 0.01


def test_vrf_generate_deterministic_and_verifies():
    keys = ValidatorKeys.from_secret(oracle_digest(b"sk"))
    beacon = oracle_digest(b"beacon")
    s1 = vrf_generate(beacon, keys)
    s2 = vrf_generate(beacon, keys)
    assert s1 == s2
    assert vrf_verify(beacon, s1, keys.pk)


def test_vrf_distinct_beacons_distinct_values():
    keys = ValidatorKeys.from_secret(oracle_digest(b"sk"))
    values = {
        vrf_generate(oracle_digest(i.to_bytes(8, "big")), keys).value
        for i in range(100_000)
    }
    assert len(values) == 100_000


def test_vrf_verify_rejects_tampering():
    keys = ValidatorKeys.from_secret(oracle_digest(b"sk"))
    beacon = oracle_digest(b"beacon")
    s = vrf_generate(beacon, keys)

    flipped = bytes([s.value[0] ^ 1]) + s.value[1:]
    assert not vrf_verify(beacon, RandomString(flipped, s.proof), keys.pk)

    other = ValidatorKeys.from_secret(oracle_digest(b"other"))
    assert not vrf_verify(beacon, vrf_generate(beacon, other), keys.pk)
    assert not vrf_verify(beacon, RandomString(s.value, b"garbage"), keys.pk)


@given(st.integers(min_value=0, max_value=2**63), st.integers(min_value=1, max_value=10))
def test_derivations_are_deterministic(seed, step):
    assert derive_beacon(seed, step) == derive_beacon(seed, step)
    assert derive_validator_keys(seed, step) == derive_validator_keys(seed, step)
    assert derive_seed(seed, step, "x") == derive_seed(seed, step, "x")
    assert derive_seed(seed, step, "x") != derive_seed(seed, step, "y")


def test_roster_ids_dense_and_stable():
    roster = build_roster({0: 2, 1: 3})
    assert [r.id for r in roster] == [0, 1, 2, 3, 4]
    assert [r.owner for r in roster] == [0, 0, 1, 1, 1]
    again = build_roster({0: 2, 1: 3})
    assert roster == again
    assert len({r.payload_digest for r in roster}) == len(roster)


def test_report_equality_by_fields():
    a = Report(1, 0, report_payload_digest(1))
    b = Report(1, 0, report_payload_digest(1))
    c = Report(2, 0, report_payload_digest(2))
    assert a == b
    assert a != c
    assert a.with_owner(5).owner == 5
    assert a.with_owner(5).payload_digest == a.payload_digest


def test_block_requires_positive_index():
    keys = ValidatorKeys.from_secret(oracle_digest(b"sk"))
    beacon = oracle_digest(b"beacon")
    s = vrf_generate(beacon, keys)
    with pytest.raises(ValueError):
        Block(0, beacon, s, ())
