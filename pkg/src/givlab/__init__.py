"""givlab: probability with incompatible variables, one Hilbert space per variable."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .hilbert import (  # noqa: E402
    StateVector,
    basis_vector,
    born_probability,
    commutator,
    diagonalize_unitary,
    inner_product,
    is_orthonormal_set,
    is_unitary,
)
from .engine import (  # noqa: E402
    GivState,
    GivSystem,
    TransitionMatrix,
    VariableSpec,
    direct_probability,
    embed_pair,
    indirect_probability,
    interference_cross_term,
    interference_deviation,
    measure,
    orthogonality_defect,
    restricted_born,
    rotation_angles,
)
from .arrow import (  # noqa: E402
    ArrowConfig,
    ProbabilityFunction,
    SymmetryLevel,
    build_arrow_system,
    c2_closure_defect,
    composition_defect,
    isotropy_scan,
    prepare,
    sample_frequencies,
    spin_half_reference,
)
from .symmetry import (  # noqa: E402
    FiniteGroup,
    Representation,
    build_S_from_parallel_axes,
    collapse,
    diagonalizer_unitarity,
    eigen_invariance_check,
    generalized_equivalence_check,
    spin_half_bundle,
    verify_representation,
)
