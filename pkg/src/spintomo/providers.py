"""Two-party tomogram providers.

A provider answers ``joint(n1, n2)``: the table ``w(m1, m2; n1, n2)`` for
unit vectors of shape (..., 3), returned with shape (..., k, k) in label
order. The inequality evaluators only talk to this interface, so exact,
closed-form and empirical tomograms are interchangeable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import DomainError
from .states import BlochData, DensityMatrix, bloch_decompose
from .tomography import as_vectors, party_levels, projector_stack


class TomogramProvider(Protocol):
    levels: int

    def joint(self, n1, n2) -> np.ndarray: ...


@dataclass(frozen=True)
class StateProvider:
    """Exact ``tr[rho Pi(m1, n1) (x) Pi(m2, n2)]`` for a two-party state."""

    state: DensityMatrix
    levels: int = field(init=False)
    _tensor: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k = party_levels(self.state.dim, 2)
        object.__setattr__(self, "levels", k)
        object.__setattr__(self, "_tensor", self.state.matrix.reshape(k, k, k, k))

    def joint(self, n1, n2) -> np.ndarray:
        p = projector_stack(self.levels, as_vectors(n1))
        q = projector_stack(self.levels, as_vectors(n2))
        return np.real(np.einsum("abcd,...mca,...ndb->...mn", self._tensor, p, q, optimize=True))


@dataclass(frozen=True)
class BlochProvider:
    """Two-qubit tomogram from Bloch vectors and correlation tensor."""

    bloch: BlochData
    levels: int = 2

    @classmethod
    def from_state(cls, rho: DensityMatrix) -> "BlochProvider":
        return cls(bloch_decompose(rho))

    def joint(self, n1, n2) -> np.ndarray:
        a, b = as_vectors(n1), as_vectors(n2)
        ax = a @ self.bloch.x
        by = b @ self.bloch.y
        azb = np.einsum("...i,ij,...j->...", a, self.bloch.z, b)
        m = np.array([1.0, -1.0])
        return 0.25 * (
            1
            + m[:, None] * ax[..., None, None]
            + m[None, :] * by[..., None, None]
            + np.outer(m, m) * azb[..., None, None]
        )


_QUTRIT_M = np.array([1.0, 0.0, -1.0])


@dataclass(frozen=True)
class WernerProvider:
    """Closed-form Werner tomograms for d = 2 or 3."""

    d: int
    phi: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise DomainError(f"Werner states supported for d in (2, 3), got {self.d}")
        if not -1.0 <= self.phi <= 1.0:
            raise DomainError(f"Werner parameter phi={self.phi} outside [-1, 1]")

    @property
    def levels(self) -> int:
        return self.d

    def joint(self, n1, n2) -> np.ndarray:
        c = np.sum(as_vectors(n1) * as_vectors(n2), axis=-1)[..., None, None]
        phi = self.phi
        if self.d == 2:
            mm = np.array([[1.0, -1.0], [-1.0, 1.0]])
            return 0.25 * (1 + (2 * phi - 1) / 3 * mm * c)
        m1 = _QUTRIT_M[:, None]
        m2 = _QUTRIT_M[None, :]
        a1, a2 = 1 - m1**2, 1 - m2**2
        q1, q2 = 1.5 * m1**2 - 1, 1.5 * m2**2 - 1
        bracket = (
            3 * a1 * a2
            + a1 * (3 * m2**2 - 2)
            + a2 * (3 * m1**2 - 2)
            + 0.5 * m1 * m2 * c
            + q1 * q2 * (1 + c**2)
        )
        return (3 - phi) / 24 + (3 * phi - 1) / 24 * bracket


def provider_for(rho: DensityMatrix) -> StateProvider:
    return StateProvider(rho)
