"""Local Lambda polytope toolkit: exact polytope combinatorics, local-pair
phase spaces with closed-form measurement updates, robustness LPs and a
sampling simulator for adaptive Pauli measurements on magic cluster states."""

__version__ = "0.1.0"

from ._accel import backend
from .catalogs import PhaseSpaceCatalog, build_phase_space, custom_catalog
from .errors import *  # noqa: F401,F403
from .locally_closed import LocalPair, classify, is_locally_closed, is_maximal, local_closure
from .lp import QuasiDistribution, decompose_probability, robustness, solve_lp
from .pauli import ExpectationVector, PauliPoint, beta, symplectic_form
from .polytope import (
    enumerate_vertices,
    from_ns_table,
    is_vertex,
    lambda_facets,
    local_lambda_facets,
    membership,
    to_ns_table,
)
from .simulator import (
    Graph,
    MagicClusterSpec,
    MeasurementSchedule,
    born_oracle,
    magic_cluster,
    propagate_exact,
    run_trajectory,
    simulate,
)
from .stabilizer import StabilizerProjector, enumerate_local_stabilizer_states, enumerate_stabilizer_states
from .updates import MeasurementSpec, destructive_project, facet_chain, project_operator, update
