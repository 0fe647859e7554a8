"""Bell-Wigner, CHSH and Uffink inequalities evaluated on tomograms.

Every evaluator works from ``provider.joint`` alone. The ``*_lhs`` functions
accept batches of direction vectors with shape (..., 3) and return arrays;
the ``eval_*`` functions take single directions and return an
:class:`InequalityReport`.

Margins are signed so that a positive margin means violation:

* Wigner  ``P(a,b) + P(b,c) - P(a,c) >= 0``           margin = -lhs
* CHSH    ``|M(a,b) - M(a,c)| + M(b',b) + M(b',c) - 2 <= 0``  margin = lhs
* Uffink  ``<AB' + A'B>^2 + <AB - A'B'>^2 <= 1``       margin = lhs - 1
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .providers import TomogramProvider
from .tomography import Direction, as_vectors, labels

VIOLATION_EPS = 1e-12
ORTHO_TOL = 1e-10


class Kind(str, Enum):
    WIGNER = "wigner"
    CHSH = "chsh"
    UFFINK = "uffink"

    @property
    def n_directions(self) -> int:
        return 3 if self is Kind.WIGNER else 4

    @property
    def bound(self) -> float:
        return 1.0 if self is Kind.UFFINK else 0.0


@dataclass(frozen=True)
class InequalityReport:
    kind: Kind
    directions: tuple[Direction, ...]
    lhs: float
    bound: float
    margin: float
    violated: bool

    def __post_init__(self):
        if not np.isfinite(self.margin):
            raise DomainError("inequality margin is not finite")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "directions": [d.to_dict() for d in self.directions],
            "lhs": self.lhs,
            "bound": self.bound,
            "margin": self.margin,
            "violated": self.violated,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InequalityReport":
        return cls(
            kind=Kind(data["kind"]),
            directions=tuple(Direction.from_dict(d) for d in data["directions"]),
            lhs=float(data["lhs"]),
            bound=float(data["bound"]),
            margin=float(data["margin"]),
            violated=bool(data["violated"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    CSV_HEADER = ("kind", "directions", "lhs", "bound", "margin", "violated")

    def csv_row(self) -> list[str]:
        dirs = ";".join(f"{d.theta!r},{d.phi!r}" for d in self.directions)
        return [self.kind.value, dirs, repr(self.lhs), repr(self.bound), repr(self.margin), str(self.violated).lower()]


def margin_of(kind: Kind, lhs):
    """Signed violation margin for a left-hand side value (or array)."""
    kind = Kind(kind)
    if kind is Kind.WIGNER:
        return -lhs
    if kind is Kind.CHSH:
        return lhs
    return lhs - 1.0


def make_report(kind: Kind, dirs, lhs: float) -> InequalityReport:
    kind = Kind(kind)
    dirs = tuple(d if isinstance(d, Direction) else Direction.from_vector(d) for d in dirs)
    margin = float(margin_of(kind, lhs))
    return InequalityReport(kind, dirs, float(lhs), kind.bound, margin, margin > VIOLATION_EPS)


def _require_levels(t: TomogramProvider, allowed: tuple[int, ...], what: str) -> None:
    if t.levels not in allowed:
        raise DomainError(f"{what} needs a provider with local dimension in {allowed}, got {t.levels}")


def correlation(t: TomogramProvider, n1, n2):
    """``sum m1 m2 w(m1, m2; n1, n2)``; for qutrits this is ``<(n1.J)(n2.J)>``."""
    m = np.asarray(labels(t.levels), dtype=float)
    return np.einsum("...ij,i,j->...", t.joint(n1, n2), m, m)


def correlation_M(t: TomogramProvider, n1, n2) -> float:
    _require_levels(t, (2,), "the correlation function M")
    return float(correlation(t, as_vectors(n1), as_vectors(n2)))


def wigner_joint_prob(t: TomogramProvider, n1, n2) -> float:
    """Probability of outcome (+1, +1)."""
    _require_levels(t, (2,), "the Wigner joint probability")
    return float(t.joint(as_vectors(n1), as_vectors(n2))[..., 0, 0])


def wigner_lhs(t: TomogramProvider, na, nb, nc):
    a, b, c = as_vectors(na), as_vectors(nb), as_vectors(nc)
    p = lambda u, v: t.joint(u, v)[..., 0, 0]  # noqa: E731
    return p(a, b) + p(b, c) - p(a, c)


def chsh_lhs(t: TomogramProvider, na, nb, nbp, nc):
    a, b, bp, c = (as_vectors(x) for x in (na, nb, nbp, nc))
    m = lambda u, v: correlation(t, u, v)  # noqa: E731
    return np.abs(m(a, b) - m(a, c)) + m(bp, b) + m(bp, c) - 2.0


def uffink_lhs(t: TomogramProvider, na, nap, nb, nbp):
    a, ap, b, bp = (as_vectors(x) for x in (na, nap, nb, nbp))
    e = lambda u, v: correlation(t, u, v)  # noqa: E731
    return (e(a, bp) + e(ap, b)) ** 2 + (e(a, b) - e(ap, bp)) ** 2


def eval_wigner(t: TomogramProvider, na, nb, nc) -> InequalityReport:
    _require_levels(t, (2,), "the Bell-Wigner inequality")
    return make_report(Kind.WIGNER, (na, nb, nc), float(wigner_lhs(t, na, nb, nc)))


def eval_chsh(t: TomogramProvider, na, nb, nbp, nc) -> InequalityReport:
    _require_levels(t, (2,), "the CHSH inequality")
    return make_report(Kind.CHSH, (na, nb, nbp, nc), float(chsh_lhs(t, na, nb, nbp, nc)))


def check_orthogonal(u, v, tol: float = ORTHO_TOL) -> None:
    dots = np.abs(np.sum(as_vectors(u) * as_vectors(v), axis=-1))
    if np.any(dots > tol):
        raise DomainError(f"setting pair is not orthogonal (|n.n'| = {float(np.max(dots)):.3g})")


def eval_uffink(t: TomogramProvider, na, nap, nb, nbp) -> InequalityReport:
    """Uffink's quadratic inequality with ``A = n_A . S`` etc.

    Requires ``n_A`` orthogonal to ``n_A'`` and ``n_B`` orthogonal to ``n_B'``.
    """
    _require_levels(t, (2, 3), "the Uffink inequality")
    check_orthogonal(na, nap)
    check_orthogonal(nb, nbp)
    return make_report(Kind.UFFINK, (na, nap, nb, nbp), float(uffink_lhs(t, na, nap, nb, nbp)))


def evaluate(kind, t: TomogramProvider, dirs) -> InequalityReport:
    kind = Kind(kind)
    if len(dirs) != kind.n_directions:
        raise DomainError(f"{kind.value} takes {kind.n_directions} directions, got {len(dirs)}")
    fn = {Kind.WIGNER: eval_wigner, Kind.CHSH: eval_chsh, Kind.UFFINK: eval_uffink}[kind]
    return fn(t, *dirs)


def lhs_batch(kind, t: TomogramProvider, vectors: np.ndarray) -> np.ndarray:
    """Left-hand sides for stacked vectors of shape (N, n_directions, 3)."""
    kind = Kind(kind)
    cols = [vectors[:, i] for i in range(kind.n_directions)]
    fn = {Kind.WIGNER: wigner_lhs, Kind.CHSH: chsh_lhs, Kind.UFFINK: uffink_lhs}[kind]
    return fn(t, *cols)


def optimal_chsh_directions(nb: Direction = None, nc: Direction = None) -> tuple[Direction, ...]:
    """Settings ``(n_a, n_b, n_b', n_c)`` that maximise CHSH for anti-correlated Werner states.

    ``n_b`` and ``n_c`` must be orthogonal; defaults are the x and y axes.
    """
    b = as_vectors(nb) if nb is not None else np.array([1.0, 0.0, 0.0])
    c = as_vectors(nc) if nc is not None else np.array([0.0, 1.0, 0.0])
    check_orthogonal(b, c)
    a = (b - c) / np.linalg.norm(b - c)
    bp = -(b + c) / np.linalg.norm(b + c)
    return tuple(Direction.from_vector(v) for v in (a, b, bp, c))
