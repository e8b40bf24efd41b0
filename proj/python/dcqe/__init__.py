"""Python access to the delayed-choice quantum eraser simulator."""

from ._dcqe import (
    ConfigError,
    Error,
    LogError,
    NoConsistentHistory,
    bomb_probabilities,
    chi_square_sf,
    condition_intensity,
    declared_table,
    first_envelope_zero,
    fringe_period,
    pairs_to_significance,
    run_cli,
    simulate_table,
    visibility,
)

__all__ = [
    "ConfigError",
    "Error",
    "LogError",
    "NoConsistentHistory",
    "bomb_probabilities",
    "chi_square_sf",
    "condition_intensity",
    "declared_table",
    "first_envelope_zero",
    "fringe_period",
    "pairs_to_significance",
    "run_cli",
    "simulate_table",
    "visibility",
]
