"""Tomographic probability representation of spin states and Bell-type inequalities."""

from .errors import (
    DomainError,
    IllPosedError,
    InvariantError,
    MissingDataError,
    ShapeError,
    SpinTomoError,
)
from .states import (
    BlochData,
    DensityMatrix,
    SeparableSpec,
    basis_projector,
    bloch_decompose,
    mix_separable,
    pauli,
    spin1_generators,
    swap_operator,
    werner,
)
from .tomography import (
    Direction,
    Tomogram,
    dequantizer_qubit,
    dequantizer_qutrit,
    is_factorized,
    rotation_spin_half,
    tomogram_multi,
    tomogram_single,
    two_qubit_tomo_closed,
    werner_qutrit_tomo_closed,
)

__version__ = "0.1.0"
