from relay_aoi.policies.basic import PolicySpec, greedy_action, random_action
from relay_aoi.policies.dp import (
    DPTable,
    evaluate_fixed_sequence,
    exhaustive_minimum,
    solve_backward_induction,
)
from relay_aoi.policies.qlearn import QParams, QTable, best_action, q_action, train_q_learning

__all__ = [
    "DPTable",
    "PolicySpec",
    "QParams",
    "QTable",
    "best_action",
    "evaluate_fixed_sequence",
    "exhaustive_minimum",
    "greedy_action",
    "q_action",
    "random_action",
    "solve_backward_induction",
    "train_q_learning",
]
