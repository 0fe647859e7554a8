import math

import numpy as np
import pytest

from spintomo.errors import DomainError
from spintomo.inequalities import Kind, lhs_batch
from spintomo.providers import StateProvider, WernerProvider
from spintomo.search import (
    SearchConfig,
    maximize_margin,
    n_parameters,
    sweep,
    threshold_phi,
    vectors_from_params,
)
from spintomo.states import werner

FAST = SearchConfig(restarts=6, seed=3)


def test_config_validation():
    with pytest.raises(DomainError):
        SearchConfig(restarts=0)
    with pytest.raises(DomainError):
        SearchConfig(tolerance=0)


def test_uffink_parameterisation_is_orthogonal(rng):
    for _ in range(50):
        v = vectors_from_params(Kind.UFFINK, rng.uniform(-7, 7, n_parameters(Kind.UFFINK)))
        assert np.allclose(np.linalg.norm(v, axis=1), 1, atol=1e-12)
        assert abs(v[0] @ v[1]) < 1e-12 and abs(v[2] @ v[3]) < 1e-12


def test_chsh_singlet_maximum():
    res = maximize_margin(WernerProvider(2, -1), Kind.CHSH, FAST)
    assert abs(res.best_report.lhs - (2 * math.sqrt(2) - 2)) < 1e-6
    assert res.best_report.violated


def test_chsh_maximum_with_exact_provider():
    res = maximize_margin(StateProvider(werner(2, -1)), Kind.CHSH, SearchConfig(restarts=3, seed=1))
    assert abs(res.best_margin - (2 * math.sqrt(2) - 2)) < 1e-6


def test_wigner_singlet_maximum():
    res = maximize_margin(WernerProvider(2, -1), Kind.WIGNER, FAST)
    assert abs(res.best_margin - 1 / 8) < 1e-8


@pytest.mark.parametrize("phi", [-1.0, -0.3, 0.4, 1.0])
def test_uffink_qutrit_never_violated(phi):
    res = maximize_margin(WernerProvider(3, phi), Kind.UFFINK, FAST)
    assert res.best_margin < 0
    # the supremum of the left-hand side is ((3 phi - 1)/12)^2 * 4
    assert res.best_report.lhs <= ((3 * phi - 1) / 12) ** 2 * 4 + 1e-12
    assert abs(res.best_report.lhs - ((3 * phi - 1) / 12) ** 2 * 4) < 1e-8


@pytest.mark.parametrize("phi", np.linspace(-1, 1, 21))
def test_search_dominates_random_settings(phi, rng):
    t = WernerProvider(2, phi)
    res = maximize_margin(t, Kind.CHSH, SearchConfig(restarts=4, seed=0))
    v = np.array([[u / np.linalg.norm(u) for u in rng.normal(size=(4, 3))] for _ in range(500)])
    assert res.best_margin >= lhs_batch(Kind.CHSH, t, v).max() - 1e-9
    expected = abs(2 * phi - 1) / 3 * 2 * math.sqrt(2) - 2
    assert abs(res.best_margin - expected) < 1e-6


def test_determinism():
    a = maximize_margin(WernerProvider(2, -0.7), Kind.CHSH, FAST)
    b = maximize_margin(WernerProvider(2, -0.7), Kind.CHSH, FAST)
    assert a.to_json() == b.to_json()


def test_more_restarts_never_worse():
    t = WernerProvider(2, -0.6)
    few = maximize_margin(t, Kind.WIGNER, SearchConfig(restarts=2, max_iterations=60, seed=5))
    many = maximize_margin(t, Kind.WIGNER, SearchConfig(restarts=8, max_iterations=60, seed=5))
    assert many.best_margin >= few.best_margin


def test_stop_above_short_circuits():
    t = WernerProvider(2, -1)
    full = maximize_margin(t, Kind.CHSH, SearchConfig(restarts=8))
    early = maximize_margin(t, Kind.CHSH, SearchConfig(restarts=8), stop_above=0.0)
    assert early.evaluations < full.evaluations
    assert early.best_margin > 0


def test_scope_errors():
    with pytest.raises(DomainError):
        maximize_margin(WernerProvider(3, 0), Kind.CHSH, FAST)
    with pytest.raises(DomainError):
        threshold_phi(3, Kind.WIGNER, FAST)
    with pytest.raises(DomainError):
        sweep(4, Kind.UFFINK, [0.0], FAST)


def test_uffink_qutrit_has_no_threshold():
    assert threshold_phi(3, Kind.UFFINK, SearchConfig(restarts=3), bisect_tol=1e-2) is None


def test_sweep_shape():
    out = sweep(2, Kind.WIGNER, [-1.0, 0.0], SearchConfig(restarts=3))
    assert [p for p, _ in out] == [-1.0, 0.0]
    assert out[0][1].best_margin > 0 > out[1][1].best_margin


@pytest.mark.slow
def test_parallel_matches_serial():
    cfg = SearchConfig(restarts=4, seed=9)
    par = SearchConfig(restarts=4, seed=9, workers=2)
    a = maximize_margin(WernerProvider(2, -0.9), Kind.CHSH, cfg)
    b = maximize_margin(WernerProvider(2, -0.9), Kind.CHSH, par)
    assert a.to_json() == b.to_json()
