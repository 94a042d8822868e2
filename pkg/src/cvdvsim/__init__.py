"""cvdvsim: a hybrid qubit/qumode/rotor statevector simulator.

Dense mixed-radix statevector with per-mode Fock cutoffs, a typed textual
circuit IR with static validation, Hamiltonian builders, and an algorithm
suite (rotor phase estimation, grid-emulated order finding, kernel-integral
ODE solving, Fock-encoded binary optimization, Hamiltonian-descent
minimization, Trotterized dynamics).
"""

from .engine import (
    SimResult,
    apply_expr,
    apply_gate,
    correlation_spectrum,
    evolve_time_dependent,
    evolve_trotter,
    expectation,
    homodyne_samples,
    measure_homodyne,
    run,
    survival_probability,
    two_time_correlation,
)
from .errors import (
    CapacityError,
    CircuitTypeError,
    CvdvError,
    GridUnderflowError,
    HermiticityError,
    InsufficientCutoffError,
    LayoutMismatchError,
    LeakageWarning,
    MeasurementError,
    ModeIndexError,
    OperatorError,
    ParseError,
    UnsupportedTermError,
)
from .hamiltonians import HamiltonianExpr, SpinBosonSpec, Term
from .ir import Circuit, parse, resource_count, serialize, validate
from .registers import (
    HybridState,
    Qubit,
    Qumode,
    RegisterLayout,
    Rotor,
    basis_state,
    coords_of,
    index_of,
    init_vacuum,
    inner_product,
    make_layout,
    memory_estimate,
)

__version__ = "0.1.0"
