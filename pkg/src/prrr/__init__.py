"""Second-price random-reward reporting: protocol, game engine, verifiers."""

from .core import (
    DUMMY,
    DUMMY_ID,
    Block,
    DummyReport,
    Money,
    PublisherId,
    RandomString,
    Report,
    ValidatorId,
    ValidatorKeys,
    oracle_digest,
    oracle_uniform,
    vrf_generate,
    vrf_verify,
)
from .rvalue import (
    LogarithmicSpec,
    PolarizedSpec,
    PropertyCheckConfig,
    RandomValueSpec,
    check_reward_monotonicity,
    check_skipping_resistance,
    expected_contract_cost,
    rallpub_closed_form,
    rallpub_monte_carlo,
    rv_eval,
)

__all__ = [
    "DUMMY",
    "DUMMY_ID",
    "Block",
    "DummyReport",
    "LogarithmicSpec",
    "Money",
    "PolarizedSpec",
    "PropertyCheckConfig",
    "PublisherId",
    "RandomString",
    "RandomValueSpec",
    "Report",
    "ValidatorId",
    "ValidatorKeys",
    "check_reward_monotonicity",
    "check_skipping_resistance",
    "expected_contract_cost",
    "oracle_digest",
    "oracle_uniform",
    "rallpub_closed_form",
    "rallpub_monte_carlo",
    "rv_eval",
    "vrf_generate",
    "vrf_verify",
]
