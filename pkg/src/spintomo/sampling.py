"""Monte Carlo simulation of local Stern-Gerlach measurements.

Outcomes are drawn from the exact tomogram by inverse-CDF lookup using
numpy's counter-based Philox generator, so a (seed, directions, shots)
triple always reproduces the same counts.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, MissingDataError, ShapeError
from .states import DensityMatrix
from .tomography import Direction, Tomogram, as_vectors, labels, tomogram_multi


def make_rng(seed: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.Philox(seed))


def setting_seed(seed: int, index: int) -> int:
    return seed ^ index


@dataclass(frozen=True)
class ShotRecord:
    directions: tuple[Direction, ...]
    counts: np.ndarray = field(repr=False)
    shots: int
    seed: int

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != len(self.directions):
            raise ShapeError("count table needs one axis per direction")
        if np.any(c < 0) or int(c.sum()) != self.shots:
            raise DomainError("counts must be nonnegative and sum to shots")
        c = c.astype(np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "directions", tuple(self.directions))
        object.__setattr__(self, "counts", c)

    @property
    def levels(self) -> int:
        return self.counts.shape[0]

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots

    def tomogram(self) -> Tomogram:
        return Tomogram(self.directions, self.frequencies())

    def rows(self):
        ls = labels(self.levels)
        for idx in np.ndindex(*self.counts.shape):
            yield tuple(ls[i] for i in idx), int(self.counts[idx])

    def to_dict(self) -> dict:
        return {
            "directions": [d.to_dict() for d in self.directions],
            "outcomes_per_party": list(self.counts.shape),
            "counts": [{"outcome": list(o), "count": n} for o, n in self.rows()],
            "shots": self.shots,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ShotRecord":
        shape = tuple(data["outcomes_per_party"])
        c = np.zeros(shape, dtype=np.int64)
        for row in data["counts"]:
            c[tuple(labels(k).index(m) for k, m in zip(shape, row["outcome"]))] = row["count"]
        dirs = tuple(Direction.from_dict(d) for d in data["directions"])
        return cls(dirs, c, int(data["shots"]), int(data["seed"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ShotRecord":
        return cls.from_dict(json.loads(text))

    def csv_header(self) -> list[str]:
        n = len(self.directions)
        cols = [c for i in range(1, n + 1) for c in (f"theta{i}", f"phi{i}")]
        return cols + [f"m{i}" for i in range(1, n + 1)] + ["count", "shots", "seed"]

    def csv_rows(self) -> Iterable[list[str]]:
        angles = [repr(a) for d in self.directions for a in (d.theta, d.phi)]
        for outcome, n in self.rows():
            yield angles + [str(m) for m in outcome] + [str(n), str(self.shots), str(self.seed)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header())
        w.writerows(self.csv_rows())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ShotRecord":
        rows = list(csv.DictReader(ln for ln in text.splitlines() if ln and not ln.startswith("#")))
        if not rows:
            raise DomainError("empty shot record")
        n = sum(1 for k in rows[0] if k.startswith("theta"))
        dirs = tuple(Direction(float(rows[0][f"theta{i}"]), float(rows[0][f"phi{i}"])) for i in range(1, n + 1))
        levels = 3 if len(rows) == 3**n else 2
        c = np.zeros((levels,) * n, dtype=np.int64)
        for r in rows:
            c[tuple(labels(levels).index(int(r[f"m{i}"])) for i in range(1, n + 1))] = int(r["count"])
        return cls(dirs, c, int(rows[0]["shots"]), int(rows[0]["seed"]))


def draw_counts(probabilities: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling of *shots* outcomes from a probability table."""
    p = np.asarray(probabilities, dtype=float).ravel()
    cdf = np.cumsum(p)
    # everything past the last supported outcome is pinned to 1 so that
    # zero-probability trailing outcomes have empty intervals
    last = int(np.flatnonzero(p > 0)[-1])
    cdf[last:] = 1.0
    idx = np.searchsorted(cdf, rng.random(shots), side="right")
    return np.bincount(idx, minlength=p.size).reshape(np.shape(probabilities))


def sample(rho: DensityMatrix, dirs: Sequence[Direction], shots: int, seed: int) -> ShotRecord:
    """Simulate *shots* joint measurements along *dirs*."""
    if shots < 1:
        raise DomainError("shots must be >= 1")
    if not isinstance(rho, DensityMatrix):
        raise DomainError("sample needs a validated DensityMatrix")
    t = tomogram_multi(rho, dirs)
    counts = draw_counts(t.probabilities, shots, make_rng(seed))
    return ShotRecord(tuple(dirs), counts, shots, seed)


def _key(v: np.ndarray) -> tuple:
    return tuple(np.round(np.asarray(v, dtype=float), 12) + 0.0)


class EmpiricalProvider:
    """Relative frequencies from recorded two-party shot tables.

    Only the recorded direction pairs can be queried.
    """

    def __init__(self, records: Iterable[ShotRecord]):
        self._tables: dict[tuple, np.ndarray] = {}
        levels = set()
        for r in records:
            if len(r.directions) != 2:
                raise ShapeError("empirical provider needs two-party records")
            a, b = (d.cartesian for d in r.directions)
            self._tables[_key(a) + _key(b)] = r.frequencies()
            levels.add(r.levels)
        if len(levels) != 1:
            raise DomainError("records must share one local dimension")
        self.levels = levels.pop()

    def joint(self, n1, n2) -> np.ndarray:
        a, b = as_vectors(n1), as_vectors(n2)
        if a.ndim == 1:
            return self._lookup(a, b)
        return np.stack([self._lookup(u, v) for u, v in zip(a, b)])

    def _lookup(self, a, b) -> np.ndarray:
        try:
            return self._tables[_key(a) + _key(b)]
        except KeyError:
            raise MissingDataError(
                f"no recorded shots at directions {Direction.from_vector(a)}, {Direction.from_vector(b)}"
            ) from None


def empirical_provider(r: ShotRecord | Iterable[ShotRecord]) -> EmpiricalProvider:
    return EmpiricalProvider([r] if isinstance(r, ShotRecord) else r)


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    shots: int

    def __post_init__(self):
        if not self.std_error >= 0:
            raise DomainError("standard error must be nonnegative")

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "shots": self.shots}


def correlation_estimate(r: ShotRecord) -> tuple[float, float]:
    """Plug-in ``sum m1 m2 f`` and its multinomial variance."""
    ls = np.asarray(labels(r.levels), dtype=float)
    g = np.ones(r.counts.shape)
    for axis in range(r.counts.ndim):
        shape = [1] * r.counts.ndim
        shape[axis] = -1
        g = g * ls.reshape(shape)
    f = r.frequencies()
    mean = float(np.sum(g * f))
    var = max(float(np.sum(g * g * f)) - mean * mean, 0.0) / r.shots
    return mean, var


def chsh_settings(quad: Sequence[Direction]) -> list[tuple[Direction, Direction]]:
    a, b, bp, c = quad
    return [(a, b), (a, c), (bp, b), (bp, c)]


def estimate_chsh(rho: DensityMatrix, quad: Sequence[Direction], shots_per_setting: int, seed: int) -> Estimate:
    """CHSH left-hand side from simulated counts, with a delta-method error bar."""
    if shots_per_setting < 100:
        raise DomainError("estimate_chsh needs at least 100 shots per setting")
    if len(quad) != 4:
        raise DomainError("CHSH needs four directions (n_a, n_b, n_b', n_c)")
    records = [
        sample(rho, pair, shots_per_setting, setting_seed(seed, i))
        for i, pair in enumerate(chsh_settings(quad))
    ]
    return chsh_from_records(records)


def chsh_from_records(records: Sequence[ShotRecord]) -> Estimate:
    """Combine the four setting records ``(a,b), (a,c), (b',b), (b',c)``."""
    (m_ab, v_ab), (m_ac, v_ac), (m_bb, v_bb), (m_bc, v_bc) = (correlation_estimate(r) for r in records)
    value = abs(m_ab - m_ac) + m_bb + m_bc - 2.0
    # the gradient of the combination has unit-magnitude entries
    std = math.sqrt(v_ab + v_ac + v_bb + v_bc)
    return Estimate(value, std, records[0].shots)
