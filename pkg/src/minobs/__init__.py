"""Minimal observers on a finite, reversible information channel.

Observers are finite control loops over identify/select/measure POVM
triples; the channel underneath is a permutation of fine states that never
looks at how observers carve it up.
"""

from .born import CountTable, amplitudes_from_counts, born_probabilities, empirical_frequencies, state_counts
from .channel import (
    ChannelSpace,
    ReversibleDynamics,
    check_decompositional_equivalence,
    make_dynamics,
    step,
    step_inverse,
)
from .decoherence import CoarseStateVector, RCChannel, coarse_vector, evolve, impulse, run_sequence
from .errors import (
    ConfigurationError,
    DomainError,
    FixtureError,
    InvariantViolation,
    MinobsError,
    OrthogonalityError,
)
from .measurement import (
    OrderStats,
    ReactionMap,
    commutator_test,
    counterfactual_check,
    measure,
    separability_overlap,
)
from .observer import MinimalObserver, ObservationRecord, consistent_states, memory_dump
from .povm import NULL, InverseImage, Povm, PovmComponent, PovmTriple, apply, check_orthogonality, check_triple, inverse_image

__version__ = "0.1.0"

__all__ = [
    "CountTable",
    "amplitudes_from_counts",
    "born_probabilities",
    "empirical_frequencies",
    "state_counts",
    "ChannelSpace",
    "ReversibleDynamics",
    "check_decompositional_equivalence",
    "make_dynamics",
    "step",
    "step_inverse",
    "CoarseStateVector",
    "RCChannel",
    "coarse_vector",
    "evolve",
    "impulse",
    "run_sequence",
    "ConfigurationError",
    "DomainError",
    "FixtureError",
    "InvariantViolation",
    "MinobsError",
    "OrthogonalityError",
    "OrderStats",
    "ReactionMap",
    "commutator_test",
    "counterfactual_check",
    "measure",
    "separability_overlap",
    "MinimalObserver",
    "ObservationRecord",
    "consistent_states",
    "memory_dump",
    "NULL",
    "InverseImage",
    "Povm",
    "PovmComponent",
    "PovmTriple",
    "apply",
    "check_orthogonality",
    "check_triple",
    "inverse_image",
    "__version__",
]
