"""Linear least-squares state reconstruction from tomogram values.

The state is written as ``I/d + sum_k r_k G_k`` over an orthonormal basis of
traceless Hermitian matrices, so every candidate is Hermitian with unit
trace. The coefficients minimise the squared difference between predicted
and supplied tomogram entries.
"""

from __future__ import annotations

import itertools
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, IllPosedError, ShapeError
from .linalg import kron_all
from .states import DensityMatrix
from .tomography import (
    AXES,
    Direction,
    Tomogram,
    fibonacci_directions,
    party_levels,
    projector_stack,
    tomogram_multi,
)

RANK_TOL = 1e-8
PSD_TOL = 1e-9


def traceless_basis(d: int) -> np.ndarray:
    """Generalised Gell-Mann matrices normalised to unit Hilbert-Schmidt norm."""
    out = []
    for j, k in itertools.combinations(range(d), 2):
        s = np.zeros((d, d), dtype=complex)
        s[j, k] = s[k, j] = 1 / np.sqrt(2)
        a = np.zeros((d, d), dtype=complex)
        a[j, k], a[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
        out += [s, a]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        out.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return np.array(out)


def default_directions(levels: int) -> list[Direction]:
    """Smallest built-in informationally complete set for one party."""
    if levels == 2:
        return [AXES["z"], AXES["x"], AXES["y"]]
    if levels == 3:
        return fibonacci_directions(5)
    raise DomainError(f"unsupported local dimension {levels}")


def direction_grid(per_party: Sequence[Sequence[Direction]]) -> list[tuple[Direction, ...]]:
    return list(itertools.product(*per_party))


def default_grid(levels: int, parties: int) -> list[tuple[Direction, ...]]:
    return direction_grid([default_directions(levels)] * parties)


def exact_tomograms(rho: DensityMatrix, grid: Sequence[Sequence[Direction]]) -> list[Tomogram]:
    return [tomogram_multi(rho, dirs) for dirs in grid]


class Reconstruction(NamedTuple):
    state: DensityMatrix
    residual: float
    rank: int
    clipped: bool


def _as_tomogram(sample) -> Tomogram:
    if isinstance(sample, Tomogram):
        return sample
    dirs, tomo = sample
    if tuple(dirs) != tomo.directions:
        raise ShapeError("sample directions disagree with the tomogram's own directions")
    return tomo


def _local_rank(levels: int, dirs: Sequence[Direction]) -> int:
    basis = traceless_basis(levels)
    rows = [
        np.real(np.einsum("kij,ji->k", basis, p))
        for d in dirs
        for p in projector_stack(levels, d.cartesian)
    ]
    s = np.linalg.svd(np.array(rows), compute_uv=False)
    return int(np.sum(s > RANK_TOL * s[0]))


def _party_deficits(tomos: Sequence[Tomogram], parties: int, levels: int) -> list[str]:
    notes = []
    need = levels * levels - 1
    for p in range(parties):
        dirs = list({t.directions[p] for t in tomos})
        rank = _local_rank(levels, dirs)
        if rank >= need:
            continue
        msg = f"party {p + 1}: {len(dirs)} distinct direction(s) fix {rank} of {need} local parameters"
        if levels == 2:
            _, _, vt = np.linalg.svd(np.array([d.cartesian for d in dirs]))
            missing = [Direction.from_vector(v) for v in vt[rank:]]
            msg += "; missing " + ", ".join(f"(theta={d.theta:.4g}, phi={d.phi:.4g})" for d in missing)
        else:
            msg += "; supply at least 5 directions in general position"
        notes.append(msg)
    return notes


def reconstruct(samples, dim: int, *, full_output: bool = False):
    """Density matrix best reproducing the supplied tomograms.

    *samples* holds :class:`Tomogram` objects or ``(directions, Tomogram)``
    pairs. If the least-squares solution is not positive semidefinite its
    eigenvalues are clipped at zero and renormalised, and ``clipped`` is set
    in the full output.
    """
    tomos = [_as_tomogram(s) for s in samples]
    if not tomos:
        raise IllPosedError("no tomograms supplied")
    parties = tomos[0].parties
    if any(t.parties != parties for t in tomos):
        raise ShapeError("all tomograms must have the same number of parties")
    levels = party_levels(dim, parties)
    if any(set(t.outcomes_per_party) != {levels} for t in tomos):
        raise ShapeError(f"tomogram outcome counts do not match dimension {dim}")

    basis = traceless_basis(dim)
    rows, target = [], []
    for t in tomos:
        projs = [projector_stack(levels, d.cartesian) for d in t.directions]
        for idx in np.ndindex(*t.outcomes_per_party):
            p = kron_all(projs[i][idx[i]] for i in range(parties))
            rows.append(np.real(np.einsum("kij,ji->k", basis, p)))
            target.append(t.probabilities[idx] - np.real(np.trace(p)) / dim)
    a = np.array(rows)
    b = np.array(target)

    s = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(s > RANK_TOL * s[0])) if s.size else 0
    if rank < len(basis):
        notes = _party_deficits(tomos, parties, levels)
        detail = "; ".join(notes) if notes else "direction settings are not informationally complete"
        raise IllPosedError(f"design matrix rank {rank} < {len(basis)} unknowns: {detail}")

    coef, *_ = np.linalg.lstsq(a, b, rcond=None)
    m = np.eye(dim) / dim + np.einsum("k,kij->ij", coef, basis)
    m = 0.5 * (m + m.conj().T)
    residual = float(np.linalg.norm(a @ coef - b))

    w, v = np.linalg.eigh(m)
    clipped = bool(w[0] < -PSD_TOL)
    if clipped:
        w = np.clip(w, 0, None)
        w /= w.sum()
        m = (v * w) @ v.conj().T
    state = DensityMatrix(m)
    if full_output:
        return Reconstruction(state, residual, rank, clipped)
    return state


def frobenius_error(a: DensityMatrix, b: DensityMatrix) -> float:
    return float(np.linalg.norm(a.matrix - b.matrix))
