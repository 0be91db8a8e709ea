"""Quantum event engine: when events happen, which basis they pick, and what they yield."""
from .basis import PreferredBasis, bipartitions, preferred_basis, separability_score
from .branches import Branches, candidate_cuts, participants_closure, tensor_factors
from .decision import (
    EVENT,
    NO_EVENT,
    STRONG,
    EventDecision,
    Postulate,
    decide_event,
    evolve,
    observable_sets,
    phase_observability_oracle,
)
from .engine import (
    RNG_ALGORITHM,
    EventRecord,
    StateSet,
    born_sample,
    collapse,
    conditioned_kets,
    enumerate_outcomes,
    extend_basis,
    make_rng,
    rng_snapshot,
    run,
    state_set,
)
