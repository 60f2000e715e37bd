"""Built-in example models and candidate structures used across the CLI,
tests, and the experiment harness."""
from __future__ import annotations

import numpy as np

from .core import validate_generator
from .infer import ConstraintMask
from .mrna import MrnaModel
from .protein import ProteinModel


def two_state(delta: float = 1.0) -> MrnaModel:
    """Fast-switching on/off promoter with a hot and a basal rate."""
    G = validate_generator(np.array([[-10.0, 10.0], [0.34, -0.34]]))
    return MrnaModel(G, np.array([1000.0, 1.0]), delta)


def three_state(delta: float = 1.0) -> MrnaModel:
    """Cyclic-leaning three-state promoter with a decade between rates."""
    G = validate_generator(
        np.array(
            [
                [-11.0, 1.0, 10.0],
                [0.34, -10.34, 10.0],
                [0.34, 1.0, -1.34],
            ]
        )
    )
    return MrnaModel(G, np.array([1000.0, 100.0, 1.0]), delta)


def symmetric_three_state(delta: float = 1.0) -> MrnaModel:
    G = validate_generator(
        np.array(
            [
                [-2.0, 2.0, 0.0],
                [0.5, -1.0, 0.5],
                [0.0, 2.0, -2.0],
            ]
        )
    )
    return MrnaModel(G, np.array([300.0, 150.0, 20.0]), delta)


def asymmetric_three_state(delta: float = 1.0) -> MrnaModel:
    G = validate_generator(
        np.array(
            [
                [-1.0, 1.0, 0.0],
                [0.0, -0.5, 0.5],
                [1.0, 0.5, -1.5],
            ]
        )
    )
    return MrnaModel(G, np.array([300.0, 150.0, 20.0]), delta)


def two_state_protein(alpha: float = 1.0, gamma: float = 1.0, c: int = 100) -> ProteinModel:
    return ProteinModel(two_state(), alpha, gamma, c)


def two_state_mask() -> ConstraintMask:
    return ConstraintMask.full(2)


def three_state_structural_mask() -> ConstraintMask:
    """Three states, no 1<->3 transitions, all beta free."""
    return ConstraintMask(
        3,
        ("free", "free", "free"),
        (
            ("", "free", "zero"),
            ("free", "", "free"),
            ("zero", "free", ""),
        ),
    )


def refractory_three_state_mask() -> ConstraintMask:
    """Transcription only from the first state; chain 1-2-3 with no
    direct 1<->3 transitions."""
    return ConstraintMask(
        3,
        ("free", "zero", "zero"),
        (
            ("", "free", "zero"),
            ("free", "", "free"),
            ("zero", "free", ""),
        ),
    )


def selection_candidates() -> list:
    """Candidate list for structure selection on mRNA count data,
    ordered as reported: true 3-state (q=7), full 2-state (q=4),
    refractory 3-state (q=5), full 3-state (q=9)."""
    return [
        ("three-state-structural", three_state_structural_mask()),
        ("two-state-full", two_state_mask()),
        ("refractory-three-state", refractory_three_state_mask()),
        ("three-state-full", ConstraintMask.full(3)),
    ]


MODELS = {
    "two-state": two_state,
    "three-state-dirichlet": three_state,
    "three-state-symmetric": symmetric_three_state,
    "three-state-asymmetric": asymmetric_three_state,
}

MASKS = {
    "two-state-full": two_state_mask,
    "three-state-structural": three_state_structural_mask,
    "refractory-three-state": refractory_three_state_mask,
    "three-state-full": lambda: ConstraintMask.full(3),
}
