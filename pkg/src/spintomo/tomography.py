"""Spin tomograms of qubits and qutrits.

A tomogram is the joint probability of local spin projections ``m_i`` along
directions ``n_i``::

    w(m_1, ..., m_N; n_1, ..., n_N) = tr[rho  (x)_i Pi(m_i, n_i)]

where ``Pi(m, n)`` is the projector onto the eigenvector of ``n . S`` with
eigenvalue ``m``. Outcome labels are integers, ordered highest first:
``(+1, -1)`` for qubits and ``(+1, 0, -1)`` for qutrits.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import linalg
from .errors import DomainError, InvariantError, ShapeError
from .states import BlochData, DensityMatrix, spin_operators

NEG_CLAMP = 1e-12
NORM_TOL = 1e-10
TWO_PI = 2 * math.pi

LABELS = {2: (1, -1), 3: (1, 0, -1)}


def labels(levels: int) -> tuple[int, ...]:
    try:
        return LABELS[levels]
    except KeyError:
        raise DomainError(f"unsupported local dimension {levels}") from None


def wrap_angles(theta: float, phi: float) -> tuple[float, float]:
    """Map arbitrary angles onto theta in [0, pi], phi in [0, 2 pi).

    theta is reflected at the poles (which shifts phi by pi), phi is wrapped.
    The Cartesian direction is unchanged.
    """
    theta = math.fmod(theta, TWO_PI)
    if theta < 0:
        theta += TWO_PI
    if theta > math.pi:
        theta = TWO_PI - theta
        phi += math.pi
    phi = math.fmod(phi, TWO_PI)
    if phi < 0:
        phi += TWO_PI
    if phi >= TWO_PI:
        phi = 0.0
    return theta, phi


def unit_vectors(theta, phi) -> np.ndarray:
    """Cartesian unit vectors for (arrays of) polar/azimuthal angles."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


@dataclass(frozen=True)
class Direction:
    """Point on the Bloch sphere, stored as polar and azimuthal angles."""

    theta: float
    phi: float

    def __post_init__(self):
        theta, phi = float(self.theta), float(self.phi)
        if not (math.isfinite(theta) and math.isfinite(phi)):
            raise DomainError("direction angles must be finite")
        if not 0.0 <= theta <= math.pi:
            raise DomainError(f"theta={theta} outside [0, pi]; use Direction.from_angles")
        phi = math.fmod(phi, TWO_PI)
        if phi < 0:
            phi += TWO_PI
        if phi >= TWO_PI:
            phi = 0.0
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "Direction":
        return cls(*wrap_angles(theta, phi))

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "Direction":
        v = np.asarray(v, dtype=float)
        r = float(np.linalg.norm(v))
        if v.shape != (3,) or r == 0.0:
            raise DomainError("direction vector must be a nonzero 3-vector")
        x, y, z = v / r
        theta = math.acos(min(1.0, max(-1.0, z)))
        phi = math.atan2(y, x) if (x or y) else 0.0
        return cls(theta, phi)

    @property
    def cartesian(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    def to_dict(self) -> dict:
        return {"theta": self.theta, "phi": self.phi}

    @classmethod
    def from_dict(cls, data: dict) -> "Direction":
        return cls(float(data["theta"]), float(data["phi"]))


X_AXIS = Direction(math.pi / 2, 0.0)
Y_AXIS = Direction(math.pi / 2, math.pi / 2)
Z_AXIS = Direction(0.0, 0.0)
AXES = {"x": X_AXIS, "y": Y_AXIS, "z": Z_AXIS}


def as_vectors(dirs) -> np.ndarray:
    """Cartesian array (..., 3) for a Direction, sequence of them, or raw vectors."""
    if isinstance(dirs, Direction):
        return dirs.cartesian
    if isinstance(dirs, (list, tuple)) and dirs and isinstance(dirs[0], Direction):
        return np.stack([d.cartesian for d in dirs])
    v = np.asarray(dirs, dtype=float)
    if v.shape[-1:] != (3,):
        raise ShapeError(f"direction vectors must have a trailing axis of 3, got {v.shape}")
    return v


def fibonacci_directions(count: int) -> list[Direction]:
    """Equal-area Fibonacci lattice of *count* points on the sphere."""
    if count < 1:
        raise DomainError("need at least one direction")
    golden = math.pi * (3.0 - math.sqrt(5.0))
    out = []
    for i in range(count):
        z = 1.0 - (2.0 * i + 1.0) / count
        out.append(Direction.from_angles(math.acos(z), golden * i))
    return out


def random_directions(rng: np.random.Generator, count: int) -> list[Direction]:
    """Uniformly distributed directions."""
    u = rng.random(count)
    v = rng.random(count)
    return [Direction(math.acos(1 - 2 * a), TWO_PI * b) for a, b in zip(u, v)]


# --- SU(2) representations -------------------------------------------------


def rotation_spin_half(theta: float, phi: float, psi: float) -> np.ndarray:
    """Spinor rotation with Euler angles (theta, phi, psi).

    Conjugating ``|+1/2><+1/2|`` by this matrix yields the projector along
    ``(-sin(theta) cos(phi), sin(theta) sin(phi), cos(theta))``; see
    :func:`rotation_to` for the matrix that maps z onto a given direction.
    """
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [c * np.exp(0.5j * (phi + psi)), s * np.exp(0.5j * (phi - psi))],
            [-s * np.exp(-0.5j * (phi - psi)), c * np.exp(-0.5j * (phi + psi))],
        ]
    )


def rotation_spin_one(theta: float, phi: float, psi: float = 0.0) -> np.ndarray:
    """Spin-1 matrix ``exp(-i phi J3) exp(-i theta J2) exp(-i psi J3)``."""
    c, s = math.cos(theta), math.sin(theta)
    r2 = math.sqrt(2.0)
    d = np.array(
        [
            [(1 + c) / 2, -s / r2, (1 - c) / 2],
            [s / r2, c, -s / r2],
            [(1 - c) / 2, s / r2, (1 + c) / 2],
        ],
        dtype=complex,
    )
    m = np.array([1.0, 0.0, -1.0])
    return np.exp(-1j * phi * m)[:, None] * d * np.exp(-1j * psi * m)[None, :]


def rotation_to(n: Direction, levels: int, psi: float = 0.0) -> np.ndarray:
    """Unitary R with ``R |m><m| R^dagger = Pi(m, n)``."""
    if levels == 2:
        return rotation_spin_half(n.theta, math.pi - n.phi, psi)
    if levels == 3:
        return rotation_spin_one(n.theta, n.phi, psi)
    raise DomainError(f"unsupported local dimension {levels}")


# --- de-quantizers ---------------------------------------------------------


def projector_stack(levels: int, n) -> np.ndarray:
    """All projectors ``Pi(m, n)`` for vectors n of shape (..., 3).

    Returns shape (..., levels, levels, levels), the first of the trailing
    axes running over the outcome labels.
    """
    v = as_vectors(n)
    ops = spin_operators(levels)
    ndot = np.einsum("...i,ijk->...jk", v, ops)
    eye = np.eye(levels)
    if levels == 2:
        return 0.5 * np.stack([eye + ndot, eye - ndot], axis=-3)
    nsq = ndot @ ndot
    p_plus = 0.5 * ndot + 0.5 * nsq
    p_zero = eye - nsq
    p_minus = -0.5 * ndot + 0.5 * nsq
    return np.stack([p_plus, p_zero, p_minus], axis=-3)


@dataclass(frozen=True)
class Dequantizer:
    """Projector ``Pi(m, n)`` onto spin projection m along n."""

    spin: str
    m: int
    direction: Direction
    matrix: np.ndarray = field(repr=False)


def dequantizer_qubit(m: int, n: Direction) -> Dequantizer:
    """``(I + m n . sigma) / 2`` for m = +-1."""
    if m not in (1, -1):
        raise DomainError(f"qubit projection label must be +1 or -1, got {m!r}")
    ndot = np.einsum("i,ijk->jk", n.cartesian, spin_operators(2))
    return Dequantizer("half", m, n, 0.5 * (np.eye(2) + m * ndot))


def dequantizer_qutrit(m: int, n: Direction) -> Dequantizer:
    """``(1 - m^2) Id + (m/2) n.J + (3 m^2 / 2 - 1) (n.J)^2`` for m in {-1, 0, 1}."""
    if m not in (1, 0, -1):
        raise DomainError(f"qutrit projection label must be -1, 0 or 1, got {m!r}")
    ndot = np.einsum("i,ijk->jk", n.cartesian, spin_operators(3))
    mat = (1 - m * m) * np.eye(3) + 0.5 * m * ndot + (1.5 * m * m - 1) * (ndot @ ndot)
    return Dequantizer("one", m, n, mat)


def dequantizer(levels: int, m: int, n: Direction) -> Dequantizer:
    if levels == 2:
        return dequantizer_qubit(m, n)
    if levels == 3:
        return dequantizer_qutrit(m, n)
    raise DomainError(f"unsupported local dimension {levels}")


# --- tomogram tables -------------------------------------------------------


def _clean_probabilities(p: np.ndarray) -> np.ndarray:
    p = np.array(p, dtype=float)
    if np.any(p < -NEG_CLAMP):
        raise InvariantError(f"negative tomogram entry {p.min():.3g}")
    p[p < 0] = 0.0
    total = p.sum()
    if abs(total - 1) > NORM_TOL:
        raise InvariantError(f"tomogram sums to {total:.15g}, expected 1")
    return p


def _format_label(m: int, levels: int, half: bool) -> str:
    if half and levels == 2:
        return str(Fraction(m, 2))
    return str(m)


@dataclass(frozen=True)
class Tomogram:
    """Joint distribution of spin projections at fixed directions.

    ``probabilities`` has one axis per party, indexed in label order.
    """

    directions: tuple[Direction, ...]
    probabilities: np.ndarray = field(repr=False)

    def __post_init__(self):
        dirs = tuple(self.directions)
        p = _clean_probabilities(self.probabilities)
        if p.ndim != len(dirs):
            raise ShapeError(f"{len(dirs)} directions but a {p.ndim}-axis table")
        if any(k not in LABELS for k in p.shape):
            raise ShapeError(f"unsupported outcome counts {p.shape}")
        p.setflags(write=False)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "probabilities", p)

    @property
    def parties(self) -> int:
        return len(self.directions)

    @property
    def outcomes_per_party(self) -> tuple[int, ...]:
        return self.probabilities.shape

    def index(self, outcome: Sequence[int]) -> tuple[int, ...]:
        return tuple(labels(k).index(m) for k, m in zip(self.outcomes_per_party, outcome))

    def prob(self, *outcome: int) -> float:
        if len(outcome) != self.parties:
            raise ShapeError(f"expected {self.parties} outcome labels")
        return float(self.probabilities[self.index(outcome)])

    def rows(self) -> Iterator[tuple[tuple[int, ...], float]]:
        label_sets = [labels(k) for k in self.outcomes_per_party]
        for idx in np.ndindex(*self.outcomes_per_party):
            yield tuple(ls[i] for ls, i in zip(label_sets, idx)), float(self.probabilities[idx])

    def marginal(self, party: int) -> np.ndarray:
        axes = tuple(i for i in range(self.parties) if i != party)
        return self.probabilities.sum(axis=axes)

    def correlation(self) -> float:
        """Expectation of the product of outcome labels."""
        total = 0.0
        for outcome, p in self.rows():
            total += math.prod(outcome) * p
        return total

    def to_dict(self) -> dict:
        return {
            "parties": self.parties,
            "outcomes_per_party": list(self.outcomes_per_party),
            "directions": [d.to_dict() for d in self.directions],
            "table": [
                {"outcome": list(outcome), "probability": p} for outcome, p in self.rows()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Tomogram":
        dirs = tuple(Direction.from_dict(d) for d in data["directions"])
        shape = tuple(data["outcomes_per_party"])
        p = np.zeros(shape)
        for row in data["table"]:
            idx = tuple(labels(k).index(m) for k, m in zip(shape, row["outcome"]))
            p[idx] = row["probability"]
        return cls(dirs, p)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Tomogram":
        return cls.from_dict(json.loads(text))

    def csv_header(self) -> list[str]:
        cols = []
        for i in range(1, self.parties + 1):
            cols += [f"theta{i}", f"phi{i}"]
        cols += [f"m{i}" for i in range(1, self.parties + 1)]
        return cols + ["probability"]

    def csv_rows(self, half_labels: bool = False) -> Iterator[list]:
        angles = [a for d in self.directions for a in (d.theta, d.phi)]
        for outcome, p in self.rows():
            ms = [_format_label(m, k, half_labels) for m, k in zip(outcome, self.outcomes_per_party)]
            yield [repr(a) for a in angles] + ms + [repr(p)]

    def to_csv(self, half_labels: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header())
        w.writerows(self.csv_rows(half_labels))
        return buf.getvalue()


def _parse_label(text: str) -> int:
    # half-integer qubit labels are written as +-1/2
    return int(Fraction(text) * 2) if "/" in text else int(text)


def tomograms_from_csv(text: str) -> list[Tomogram]:
    """Parse CSV rows (any number of direction settings) back into tomograms."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    cols = reader.fieldnames or []
    n = sum(1 for c in cols if c.startswith("theta"))
    groups: dict[tuple, dict] = {}
    for row in reader:
        key = tuple(float(row[f"{a}{i}"]) for i in range(1, n + 1) for a in ("theta", "phi"))
        outcome = tuple(_parse_label(row[f"m{i}"]) for i in range(1, n + 1))
        groups.setdefault(key, {})[outcome] = float(row["probability"])
    out = []
    for key, table in groups.items():
        dirs = tuple(Direction(key[2 * i], key[2 * i + 1]) for i in range(n))
        levels = 3 if len(table) == 3**n else 2
        p = np.zeros((levels,) * n)
        for outcome, prob in table.items():
            p[tuple(labels(levels).index(m) for m in outcome)] = prob
        out.append(Tomogram(dirs, p))
    return out


def party_levels(dim: int, parties: int) -> int:
    """Local dimension k with k**parties == dim (k in {2, 3})."""
    for k in LABELS:
        if k**parties == dim:
            return k
    raise ShapeError(f"dimension {dim} is not 2^{parties} or 3^{parties}")


def joint_probabilities(matrix: np.ndarray, vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Raw ``tr[rho (x)_i Pi(m_i, n_i)]`` table for a state matrix and unit vectors."""
    n = len(vectors)
    k = party_levels(matrix.shape[0], n)
    r = matrix.reshape((k,) * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows, cols, outs = letters[:n], letters[n : 2 * n], letters[2 * n : 3 * n]
    # tr(rho P) = sum rho[rows, cols] P[cols, rows]; P is a product over parties
    terms = [f"{outs[i]}{cols[i]}{rows[i]}" for i in range(n)]
    spec = f"{rows}{cols}," + ",".join(terms) + f"->{outs}"
    projs = [projector_stack(k, v) for v in vectors]
    return np.real(np.einsum(spec, r, *projs, optimize=True))


def tomogram_single(rho: DensityMatrix, n: Direction) -> Tomogram:
    if rho.dim not in LABELS:
        raise DomainError(f"single-party tomogram needs dim 2 or 3, got {rho.dim}")
    return Tomogram((n,), joint_probabilities(rho.matrix, [n.cartesian]))


def tomogram_multi(rho: DensityMatrix, dirs: Sequence[Direction]) -> Tomogram:
    dirs = tuple(dirs)
    if not dirs:
        raise ShapeError("need at least one direction")
    return Tomogram(dirs, joint_probabilities(rho.matrix, [d.cartesian for d in dirs]))


def tomogram_by_rotation(rho: DensityMatrix, dirs: Sequence[Direction], psi: float = 0.0) -> np.ndarray:
    """Diagonal of ``U^dagger rho U`` with ``U = (x)_i R(n_i)``; an independent route."""
    k = party_levels(rho.dim, len(dirs))
    u = linalg.kron_all(rotation_to(d, k, psi) for d in dirs)
    diag = np.real(np.diag(u.conj().T @ rho.matrix @ u))
    return diag.reshape((k,) * len(dirs))


# --- closed forms ----------------------------------------------------------


def two_qubit_tomo_closed(bloch: BlochData, m1: int, m2: int, n1: Direction, n2: Direction) -> float:
    """``(1 + m1 n1.x + m2 n2.y + m1 m2 n1.z.n2) / 4``."""
    a, b = n1.cartesian, n2.cartesian
    return 0.25 * (1 + m1 * a @ bloch.x + m2 * b @ bloch.y + m1 * m2 * a @ bloch.z @ b)


def werner_qubit_tomo_closed(phi: float, m1: int, m2: int, n1: Direction, n2: Direction) -> float:
    c = float(n1.cartesian @ n2.cartesian)
    return 0.25 * (1 + (2 * phi - 1) / 3 * m1 * m2 * c)


def werner_qutrit_tomo_closed(phi: float, m1: int, m2: int, n1: Direction, n2: Direction) -> float:
    """Two-qutrit Werner tomogram in closed form."""
    if not -1.0 <= phi <= 1.0:
        raise DomainError(f"Werner parameter phi={phi} outside [-1, 1]")
    return _werner_qutrit_closed(phi, m1, m2, float(n1.cartesian @ n2.cartesian))


def _werner_qutrit_closed(phi, m1, m2, c):
    a1, a2 = 1 - m1 * m1, 1 - m2 * m2
    q1, q2 = 1.5 * m1 * m1 - 1, 1.5 * m2 * m2 - 1
    bracket = (
        3 * a1 * a2
        + a1 * (3 * m2 * m2 - 2)
        + a2 * (3 * m1 * m1 - 2)
        + 0.5 * m1 * m2 * c
        + q1 * q2 * (1 + c * c)
    )
    return (3 - phi) / 24 + (3 * phi - 1) / 24 * bracket


# --- structure tests -------------------------------------------------------


def is_factorized(t: Tomogram, tol: float = 1e-10) -> bool:
    """True iff the two-party table equals the outer product of its marginals."""
    if t.parties != 2:
        raise ShapeError(f"factorization test needs two parties, got {t.parties}")
    outer = np.outer(t.marginal(0), t.marginal(1))
    return bool(np.max(np.abs(t.probabilities - outer)) <= tol)


def outcome_tuples(levels: int, parties: int) -> Iterable[tuple[int, ...]]:
    return itertools.product(labels(levels), repeat=parties)
