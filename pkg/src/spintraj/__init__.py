"""Liouville-space spin dynamics under optimized control pulses.

Subpackages: system description, spherical-tensor basis construction,
propagation, GRAPE pulse optimization, trajectory analysis, and file I/O.
"""

from .analysis import (
    CohOrder,
    CorrOrder,
    Custom,
    Involving,
    LocalSpin,
    bsg_transform,
    build_projector,
    involvement_report,
    population,
    population_series,
    rdn,
    rsp,
    sg_transform,
)
from .engine import (
    ControlSet,
    StateVector,
    Trajectory,
    commutation_superoperator,
    control_operators,
    drift_hamiltonian,
    propagate,
    step_propagator,
)
from .expressions import parse_state
from .grape import (
    ControlProblem,
    Ensemble,
    OptimizationReport,
    ensemble_fidelity,
    fidelity,
    grape_gradient,
    optimize,
    phase_chain_rule,
)
from .system import Coupling, Quadrupole, Spin, SpinSystem
from .tensors import (
    BasisLabel,
    ProductBasis,
    coherence_order,
    correlation_order,
    ist_operator,
    product_basis,
    spin_operator,
)

__version__ = "0.1.0"
