"""Verification layer: best responses, equilibrium sweep, robustness checks."""

from .bestresponse import (
    ActionGrid,
    BestResponse,
    BestResponseValidator,
    pivotal_grid,
    validator_best_response,
    validator_best_response_pruned,
)
from .collusion import (
    CollusionReport,
    SybilReport,
    check_pub_val_collusion,
    check_sybil_proofness,
    coalition_transform,
    compare_coalition_traces,
    sybil_split_config,
)
from .deviations import (
    BribeToReorder,
    BribeToSkip,
    CoalitionMerge,
    DeviationKind,
    SybilSplit,
    WithholdSubset,
    named_strategy,
    strategy_for_group,
)
from .impossibility import FixedBountyBaseline, ImpossibilityReport, impossibility_demo
from .spne import (
    DeviationEstimate,
    EquilibriumReport,
    verify_spne,
)
from .stability import (
    check_single_step_bribery_bound,
    check_validator_strictness,
    bribery_bound_sweep,
    publisher_impact_probe,
    validator_strictness_sweep,
)

__all__ = [
    "ActionGrid",
    "BestResponse",
    "BestResponseValidator",
    "BribeToReorder",
    "BribeToSkip",
    "CoalitionMerge",
    "CollusionReport",
    "DeviationEstimate",
    "DeviationKind",
    "EquilibriumReport",
    "FixedBountyBaseline",
    "ImpossibilityReport",
    "SybilReport",
    "SybilSplit",
    "WithholdSubset",
    "check_single_step_bribery_bound",
    "check_pub_val_collusion",
    "check_sybil_proofness",
    "check_validator_strictness",
    "coalition_transform",
    "compare_coalition_traces",
    "impossibility_demo",
    "bribery_bound_sweep",
    "named_strategy",
    "pivotal_grid",
    "publisher_impact_probe",
    "strategy_for_group",
    "sybil_split_config",
    "validator_best_response",
    "validator_best_response_pruned",
    "validator_strictness_sweep",
    "verify_spne",
]
