"""Maximisation of inequality margins over measurement directions.

Directions are parameterised by their polar and azimuthal angles and the
margin is maximised with restarted Nelder-Mead. For the Uffink inequality the
primed setting of each party is parameterised by one angle in the plane
orthogonal to the unprimed one, so the orthogonality constraint holds by
construction.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError
from .inequalities import (
    VIOLATION_EPS,
    InequalityReport,
    Kind,
    correlation,
    evaluate,
    margin_of,
)
from .providers import StateProvider, TomogramProvider, WernerProvider
from .states import werner
from .tomography import Direction, unit_vectors

INITIAL_STEP = 0.4


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 32
    max_iterations: int = 4000
    tolerance: float = 1e-10
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise DomainError("restarts must be >= 1")
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SearchResult:
    best_report: InequalityReport
    best_margin: float
    evaluations: int
    converged: bool
    restart: int = 0

    def to_dict(self) -> dict:
        return {
            "best_report": self.best_report.to_dict(),
            "best_margin": self.best_margin,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "restart": self.restart,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def n_parameters(kind: Kind) -> int:
    return 6 if kind is not Kind.CHSH else 8


def _uffink_partner(theta, phi, chi):
    e1 = np.array([math.cos(theta) * math.cos(phi), math.cos(theta) * math.sin(phi), -math.sin(theta)])
    e2 = np.array([-math.sin(phi), math.cos(phi), 0.0])
    return math.cos(chi) * e1 + math.sin(chi) * e2


def vectors_from_params(kind: Kind, x: np.ndarray) -> np.ndarray:
    """Unit vectors (n_directions, 3) for a parameter vector."""
    if kind is Kind.UFFINK:
        ta, pa, ca, tb, pb, cb = x
        return np.stack(
            [
                unit_vectors(ta, pa),
                _uffink_partner(ta, pa, ca),
                unit_vectors(tb, pb),
                _uffink_partner(tb, pb, cb),
            ]
        )
    return unit_vectors(x[0::2], x[1::2])


# Pairs of direction indices whose joint tables each objective needs.
_PAIRS = {
    Kind.WIGNER: ([0, 1, 0], [1, 2, 2]),
    Kind.CHSH: ([0, 0, 2, 2], [1, 3, 1, 3]),
    Kind.UFFINK: ([0, 1, 0, 1], [3, 2, 2, 3]),
}


def _lhs_from_vectors(kind: Kind, t: TomogramProvider, v: np.ndarray) -> float:
    left, right = _PAIRS[kind]
    if kind is Kind.WIGNER:
        p = t.joint(v[left], v[right])[:, 0, 0]
        return float(p[0] + p[1] - p[2])
    e = correlation(t, v[left], v[right])
    if kind is Kind.CHSH:
        return float(abs(e[0] - e[1]) + e[2] + e[3] - 2.0)
    return float((e[0] + e[1]) ** 2 + (e[2] - e[3]) ** 2)


class _Objective:
    def __init__(self, kind: Kind, provider: TomogramProvider):
        self.kind = kind
        self.provider = provider

    def __call__(self, x: np.ndarray) -> float:
        lhs = _lhs_from_vectors(self.kind, self.provider, vectors_from_params(self.kind, x))
        return -float(margin_of(self.kind, lhs))


def _start_point(kind: Kind, seed: int, restart: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(restart,))))
    k = n_parameters(kind)
    x = np.empty(k)
    if kind is Kind.UFFINK:
        u = rng.random(6)
        x[:] = [
            math.acos(1 - 2 * u[0]), 2 * math.pi * u[1], 2 * math.pi * u[2],
            math.acos(1 - 2 * u[3]), 2 * math.pi * u[4], 2 * math.pi * u[5],
        ]
        return x
    u = rng.random(k)
    x[0::2] = np.arccos(1 - 2 * u[0::2])
    x[1::2] = 2 * math.pi * u[1::2]
    return x


def _nelder_mead(fun, x0: np.ndarray, cfg: SearchConfig):
    simplex = np.vstack([x0, x0 + INITIAL_STEP * np.eye(len(x0))])
    return minimize(
        fun,
        x0,
        method="Nelder-Mead",
        options={
            "xatol": cfg.tolerance,
            "fatol": 1e-15,
            "maxiter": cfg.max_iterations,
            "maxfev": 2 * cfg.max_iterations,
            "adaptive": True,
            "initial_simplex": simplex,
        },
    )


def _run_restart(args):
    kind, provider, cfg, restart = args
    fun = _Objective(kind, provider)
    res = _nelder_mead(fun, _start_point(kind, cfg.seed, restart), cfg)
    # one restart of the simplex from the optimum guards against collapse
    polish = _nelder_mead(fun, res.x, cfg)
    best = polish if polish.fun <= res.fun else res
    return restart, float(-best.fun), best.x, int(res.nfev + polish.nfev), bool(polish.success)


def _report_from_params(kind: Kind, provider: TomogramProvider, x: np.ndarray) -> InequalityReport:
    dirs = tuple(Direction.from_vector(v) for v in vectors_from_params(kind, x))
    return evaluate(kind, provider, dirs)


def _check_scope(kind: Kind, provider: TomogramProvider) -> None:
    allowed = (2, 3) if kind is Kind.UFFINK else (2,)
    if provider.levels not in allowed:
        raise DomainError(f"{kind.value} is not defined for local dimension {provider.levels}")


def maximize_margin(
    provider: TomogramProvider,
    kind,
    cfg: SearchConfig = SearchConfig(),
    *,
    stop_above: float | None = None,
) -> SearchResult:
    """Best violation margin over all measurement directions.

    Restarts begin at seeded uniform points on the sphere; restart ``k`` uses
    the same start regardless of ``cfg.restarts``. With *stop_above* set, the
    search returns as soon as a restart exceeds that margin.
    """
    kind = Kind(kind)
    _check_scope(kind, provider)
    results = []
    evaluations = 0
    chunk = max(1, cfg.workers)
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for start in range(0, cfg.restarts, chunk):
            jobs = [(kind, provider, cfg, k) for k in range(start, min(start + chunk, cfg.restarts))]
            batch = list(pool.map(_run_restart, jobs)) if pool else [_run_restart(j) for j in jobs]
            results.extend(batch)
            evaluations += sum(r[3] for r in batch)
            if stop_above is not None and max(r[1] for r in batch) > stop_above:
                break
    finally:
        if pool:
            pool.shutdown()
    restart, _, x, _, converged = max(results, key=lambda r: (r[1], -r[0]))
    report = _report_from_params(kind, provider, x)
    return SearchResult(report, report.margin, evaluations, converged, restart)


def werner_provider(d: int, phi: float, exact: bool = False) -> TomogramProvider:
    return StateProvider(werner(d, phi)) if exact else WernerProvider(d, phi)


def _check_threshold_scope(d: int, kind: Kind) -> None:
    if kind is Kind.UFFINK:
        if d not in (2, 3):
            raise DomainError(f"Uffink thresholds need d in (2, 3), got {d}")
    elif d != 2:
        raise DomainError(f"{kind.value} is a two-qubit inequality; got d={d}")


SPOT_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)


def threshold_phi(
    d: int,
    kind,
    cfg: SearchConfig = SearchConfig(),
    bisect_tol: float = 1e-4,
    *,
    exact: bool = False,
) -> float | None:
    """Werner parameter at which the maximal margin changes sign.

    Returns ``None`` when the inequality is violated everywhere or nowhere on
    [-1, 1]. The maximal margin is assumed monotone in phi; the assumption is
    spot-checked on a coarse grid and a warning is issued if it fails.
    """
    kind = Kind(kind)
    _check_threshold_scope(d, kind)
    if not bisect_tol > 0:
        raise DomainError("bisect_tol must be positive")

    def violated(phi: float) -> bool:
        res = maximize_margin(werner_provider(d, phi, exact), kind, cfg, stop_above=VIOLATION_EPS)
        return res.best_margin > VIOLATION_EPS

    flags = [violated(p) for p in SPOT_GRID]
    changes = [i for i in range(len(flags) - 1) if flags[i] != flags[i + 1]]
    if not changes:
        return None
    if len(changes) > 1:
        warnings.warn(
            f"violation is not monotone in phi on the grid {SPOT_GRID}: {flags}",
            RuntimeWarning,
            stacklevel=2,
        )
    i = changes[0]
    lo, hi = SPOT_GRID[i], SPOT_GRID[i + 1]
    lo_flag = flags[i]
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if violated(mid) == lo_flag:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sweep(
    d: int,
    kind,
    phis,
    cfg: SearchConfig = SearchConfig(),
    *,
    exact: bool = False,
) -> list[tuple[float, SearchResult]]:
    """Maximal margin at each Werner parameter in *phis*."""
    kind = Kind(kind)
    _check_threshold_scope(d, kind)
    return [(float(p), maximize_margin(werner_provider(d, p, exact), kind, cfg)) for p in phis]


def config_dict(cfg: SearchConfig) -> dict:
    return asdict(cfg)
