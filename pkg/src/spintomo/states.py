"""Density matrices: construction, validation and Pauli-basis decomposition.

Basis vectors are ordered by spin projection, highest first, so for a qubit
``e0`` is ``m = +1/2`` and for a qutrit ``e0, e1, e2`` are ``m = +1, 0, -1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .errors import DomainError, InvariantError, ShapeError

TRACE_TOL = 1e-10
PSD_TOL = 1e-9

_PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
_PAULI.setflags(write=False)

_S = 1 / np.sqrt(2)
_SPIN1 = np.array(
    [
        [[0, _S, 0], [_S, 0, _S], [0, _S, 0]],
        [[0, -1j * _S, 0], [1j * _S, 0, -1j * _S], [0, 1j * _S, 0]],
        [[1, 0, 0], [0, 0, 0], [0, 0, -1]],
    ],
    dtype=complex,
)
_SPIN1.setflags(write=False)


def pauli(i: int) -> np.ndarray:
    """Pauli matrix ``sigma_i``; index 0 is the 2x2 identity."""
    if i not in (0, 1, 2, 3):
        raise DomainError(f"Pauli index must be 0..3, got {i!r}")
    return _PAULI[i].copy()


def pauli_vector() -> np.ndarray:
    """Stack ``(sigma_x, sigma_y, sigma_z)`` with shape (3, 2, 2)."""
    return _PAULI[1:].copy()


def spin1_generators() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin-1 matrices ``J1, J2, J3`` in the ``|+1>, |0>, |-1>`` basis."""
    return tuple(j.copy() for j in _SPIN1)


def spin_operators(levels: int) -> np.ndarray:
    """Generators ``n . S`` is built from: Pauli matrices for qubits, J for qutrits.

    For qubits the operators have eigenvalues +-1 (the integer outcome labels),
    not +-1/2.
    """
    if levels == 2:
        return _PAULI[1:]
    if levels == 3:
        return _SPIN1
    raise DomainError(f"unsupported local dimension {levels}")


@dataclass(frozen=True)
class DensityMatrix:
    """A validated quantum state (Hermitian, unit trace, PSD)."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise ShapeError(f"density matrix must be square, got {m.shape}")
        if not linalg.is_hermitian(m, TRACE_TOL):
            raise DomainError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1) > TRACE_TOL:
            raise DomainError(f"density matrix has trace {tr.real:.12g}, expected 1")
        if not linalg.is_psd(m, PSD_TOL):
            raise DomainError("density matrix is not positive semidefinite")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"

    def to_dict(self) -> dict:
        flat = self.matrix.ravel()
        return {
            "dim": self.dim,
            "entries": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DensityMatrix":
        dim = int(data["dim"])
        entries = data["entries"]
        if len(entries) != dim * dim:
            raise ShapeError(f"expected {dim * dim} entries, got {len(entries)}")
        flat = np.array([complex(re, im) for re, im in entries])
        return cls(flat.reshape(dim, dim))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DensityMatrix":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class BlochData:
    """Pauli-basis coordinates of one or two qubits.

    ``x`` is the first qubit's Bloch vector, ``y`` the second's and ``z`` the
    correlation tensor ``z[i, j] = tr(rho sigma_i (x) sigma_j)``. For a single
    qubit ``y`` and ``z`` are ``None``.
    """

    x: np.ndarray
    y: np.ndarray | None = None
    z: np.ndarray | None = None

    def reassemble(self) -> np.ndarray:
        """Inverse of :func:`bloch_decompose`, returned as a raw matrix."""
        s = _PAULI
        if self.y is None:
            return 0.5 * (s[0] + np.einsum("i,ijk->jk", self.x, s[1:]))
        out = np.kron(s[0], s[0]).astype(complex)
        for i in range(3):
            out = out + self.x[i] * np.kron(s[i + 1], s[0])
            out = out + self.y[i] * np.kron(s[0], s[i + 1])
            for j in range(3):
                out = out + self.z[i, j] * np.kron(s[i + 1], s[j + 1])
        return out / 4


def basis_projector(dim: int, index: int) -> DensityMatrix:
    if not 0 <= index < dim:
        raise DomainError(f"basis index {index} out of range for dimension {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    m[index, index] = 1
    return DensityMatrix(m)


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def swap_operator(d: int) -> np.ndarray:
    """Permutation V on C^d (x) C^d with V (e_i (x) e_j) = e_j (x) e_i."""
    if d not in (2, 3):
        raise DomainError(f"swap operator supported for d in (2, 3), got {d}")
    v = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            v[j * d + i, i * d + j] = 1
    return v


def werner(d: int, phi: float) -> DensityMatrix:
    """Werner state ``[(d - phi) Id + (d phi - 1) V] / (d^3 - d)``.

    ``phi`` is the expectation value of the swap operator and must lie in
    [-1, 1].
    """
    if d not in (2, 3):
        raise DomainError(f"Werner states supported for d in (2, 3), got {d}")
    if not -1.0 <= phi <= 1.0:
        raise DomainError(f"Werner parameter phi={phi} outside [-1, 1]")
    norm = d**3 - d
    m = ((d - phi) * np.eye(d * d) + (d * phi - 1) * swap_operator(d)) / norm
    return DensityMatrix(m)


def product_state(*factors: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(linalg.kron_all(f.matrix for f in factors))


def bloch_vector(rho) -> np.ndarray:
    m = rho.matrix if isinstance(rho, DensityMatrix) else linalg.as_matrix(rho)
    return np.real(np.einsum("ij,kji->k", m, _PAULI[1:]))


def bloch_state(r: Sequence[float]) -> DensityMatrix:
    """Qubit state ``(I + r . sigma) / 2`` for a Bloch vector with ``|r| <= 1``."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ShapeError("Bloch vector must have three components")
    if np.linalg.norm(r) > 1 + TRACE_TOL:
        raise DomainError(f"Bloch vector length {np.linalg.norm(r):.6g} exceeds 1")
    return DensityMatrix(0.5 * (_PAULI[0] + np.einsum("i,ijk->jk", r, _PAULI[1:])))


def bloch_decompose(rho: DensityMatrix) -> BlochData:
    m = rho.matrix
    if rho.dim == 2:
        return BlochData(x=bloch_vector(m))
    if rho.dim != 4:
        raise DomainError(f"Bloch decomposition needs dim 2 or 4, got {rho.dim}")
    s = _PAULI
    r = m.reshape(2, 2, 2, 2)
    # tr(rho A (x) B) = sum R[a,b,c,d] A[c,a] B[d,b]
    full = np.real(np.einsum("abcd,ica,jdb->ij", r, s, s))
    return BlochData(x=full[1:, 0].copy(), y=full[0, 1:].copy(), z=full[1:, 1:].copy())


@dataclass(frozen=True)
class SeparableSpec:
    """Convex mixture ``sum_k p_k rho_k^A (x) rho_k^B``."""

    weights: tuple[float, ...]
    factors: tuple[tuple[DensityMatrix, DensityMatrix], ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.factors) or len(w) == 0:
            raise DomainError("weights and factors must be non-empty and of equal length")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise DomainError("weights must be nonnegative and sum to 1")
        da, db = self.factors[0][0].dim, self.factors[0][1].dim
        for a, b in self.factors:
            if (a.dim, b.dim) != (da, db):
                raise ShapeError("all factor pairs must share the same dimensions")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "factors", tuple((a, b) for a, b in self.factors))


def mix_separable(spec: SeparableSpec) -> DensityMatrix:
    m = sum(p * np.kron(a.matrix, b.matrix) for p, (a, b) in zip(spec.weights, spec.factors))
    return DensityMatrix(m)


def random_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Ginibre-distributed density matrix ``G G^dagger / tr``."""
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_separable(
    rng: np.random.Generator, terms: int, dims: tuple[int, int] = (2, 2)
) -> SeparableSpec:
    w = rng.dirichlet(np.ones(terms))
    factors = tuple((random_state(dims[0], rng), random_state(dims[1], rng)) for _ in range(terms))
    return SeparableSpec(tuple(w), factors)


def spin_flip(rho: DensityMatrix) -> DensityMatrix:
    """Qubit state with the Bloch vector reversed, ``sigma_y rho^T sigma_y``."""
    if rho.dim != 2:
        raise DomainError("spin flip is defined here for qubits only")
    sy = pauli(2)
    return DensityMatrix(sy @ rho.matrix.T @ sy)


def random_anticorrelated_separable(rng: np.random.Generator, terms: int) -> SeparableSpec:
    """Two-qubit mixture of ``rho (x) flip(rho)`` terms.

    Every term gives opposite outcome statistics along any common axis, which
    is the premise under which the Bell-Wigner bound holds classically.
    """
    w = rng.dirichlet(np.ones(terms))
    factors = []
    for _ in range(terms):
        a = random_state(2, rng)
        factors.append((a, spin_flip(a)))
    return SeparableSpec(tuple(w), tuple(factors))


def check_state(rho: DensityMatrix) -> None:
    """Re-validate a state produced by arithmetic; raises :class:`InvariantError`."""
    try:
        DensityMatrix(rho.matrix)
    except DomainError as exc:
        raise InvariantError(str(exc)) from exc
