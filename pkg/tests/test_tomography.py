import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_tomogram, eigenprojector
from spintomo.errors import DomainError, InvariantError, ShapeError
from spintomo.states import (
    basis_projector,
    bloch_decompose,
    maximally_mixed,
    pauli,
    product_state,
    random_state,
    spin1_generators,
    werner,
)
from spintomo.tomography import (
    AXES,
    Direction,
    Tomogram,
    dequantizer_qubit,
    dequantizer_qutrit,
    fibonacci_directions,
    is_factorized,
    projector_stack,
    random_directions,
    rotation_spin_half,
    rotation_to,
    tomogram_by_rotation,
    tomogram_multi,
    tomogram_single,
    tomograms_from_csv,
    two_qubit_tomo_closed,
    werner_qubit_tomo_closed,
    werner_qutrit_tomo_closed,
    wrap_angles,
)

X, Y, Z = AXES["x"], AXES["y"], AXES["z"]
angles = st.floats(-20, 20, allow_nan=False)


# --- directions ------------------------------------------------------------


@given(angles, angles)
def test_wrap_preserves_cartesian(theta, phi):
    t, p = wrap_angles(theta, phi)
    assert 0 <= t <= math.pi and 0 <= p < 2 * math.pi
    raw = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
    assert np.allclose(Direction(t, p).cartesian, raw, atol=1e-12)


def test_direction_invariants(rng):
    for d in random_directions(rng, 200):
        assert abs(np.linalg.norm(d.cartesian) - 1) < 1e-12
        back = Direction.from_vector(d.cartesian)
        assert np.allclose(back.cartesian, d.cartesian, atol=1e-12)
    with pytest.raises(DomainError):
        Direction(4.0, 0.0)


def test_fibonacci_is_deterministic_and_spread():
    a, b = fibonacci_directions(50), fibonacci_directions(50)
    assert a == b
    v = np.array([d.cartesian for d in a])
    assert np.linalg.norm(v.mean(axis=0)) < 0.05


# --- rotations -------------------------------------------------------------


def test_rotation_spin_half_examples(rng):
    assert np.allclose(rotation_spin_half(0, 0, 0), np.eye(2), atol=0)
    assert np.max(np.abs(rotation_spin_half(math.pi, 0, 0) - np.array([[0, 1], [-1, 0]]))) < 1e-15
    for t, p, s in rng.uniform(-7, 7, size=(100, 3)):
        u = rotation_spin_half(t, p, s)
        assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-12


def test_rotation_spin_half_axis_mapping(rng):
    # the matrix carries z onto (-sin t cos p, sin t sin p, cos t)
    for t, p, s in rng.uniform(0, 3, size=(20, 3)):
        u = rotation_spin_half(t, p, s)
        proj = u[:, [0]] @ u[:, [0]].conj().T
        bloch = [np.real(np.trace(proj @ pauli(k))) for k in (1, 2, 3)]
        assert np.allclose(bloch, [-math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)], atol=1e-12)


# --- de-quantizers ---------------------------------------------------------


def test_dequantizer_qubit_examples(rng):
    assert np.allclose(dequantizer_qubit(1, Z).matrix, np.diag([1, 0]), atol=1e-15)
    assert np.allclose(dequantizer_qubit(-1, X).matrix, 0.5 * np.array([[1, -1], [-1, 1]]), atol=1e-15)
    for n in random_directions(rng, 50):
        for m in (1, -1):
            u = rotation_to(n, 2, psi=rng.uniform(0, 6))
            e = np.eye(2)[:, [0 if m == 1 else 1]]
            assert np.max(np.abs(dequantizer_qubit(m, n).matrix - u @ e @ e.T @ u.conj().T)) < 1e-12
    with pytest.raises(DomainError):
        dequantizer_qubit(0, Z)


def test_dequantizer_qutrit_examples(rng):
    assert np.allclose(dequantizer_qutrit(0, Z).matrix, np.diag([0, 1, 0]), atol=1e-15)
    assert np.allclose(dequantizer_qutrit(1, Z).matrix, np.diag([1, 0, 0]), atol=1e-15)
    js = np.array(spin1_generators())
    for n in random_directions(rng, 50):
        nj = np.einsum("i,ijk->jk", n.cartesian, js)
        for m in (1, 0, -1):
            assert np.max(np.abs(dequantizer_qutrit(m, n).matrix - eigenprojector(nj, m))) < 1e-10
            u = rotation_to(n, 3, psi=1.3)
            e = np.eye(3)[:, [1 - m]]
            assert np.max(np.abs(dequantizer_qutrit(m, n).matrix - u @ e @ e.T @ u.conj().T)) < 1e-12
    with pytest.raises(DomainError):
        dequantizer_qutrit(2, Z)


@pytest.mark.parametrize("levels", [2, 3])
def test_dequantizer_projector_and_completeness(rng, levels):
    for n in random_directions(rng, 100):
        stack = projector_stack(levels, n.cartesian)
        assert np.max(np.abs(stack.sum(axis=0) - np.eye(levels))) < 1e-12
        for p in stack:
            assert np.max(np.abs(p @ p - p)) < 1e-10
            assert np.max(np.abs(p - p.conj().T)) < 1e-10
            assert abs(np.trace(p) - 1) < 1e-10


# --- tomograms -------------------------------------------------------------


def test_single_qubit_formula(rng):
    rho = basis_projector(2, 0)
    for n in random_directions(rng, 50):
        t = tomogram_single(rho, n)
        assert abs(t.prob(1) - math.cos(n.theta / 2) ** 2) < 1e-12
        assert abs(t.prob(-1) - math.sin(n.theta / 2) ** 2) < 1e-12
        assert np.allclose(tomogram_single(maximally_mixed(2), n).probabilities, [0.5, 0.5], atol=1e-15)


def test_single_qutrit_against_trace():
    rho = basis_projector(3, 1)
    t = tomogram_single(rho, X)
    brute = [brute_tomogram(rho.matrix, [dequantizer_qutrit(m, X).matrix]) for m in (1, 0, -1)]
    assert np.allclose(t.probabilities, brute, atol=1e-14)
    assert abs(t.probabilities.sum() - 1) < 1e-12
    # |m=0> seen along x: |d^1_{m0}(pi/2)|^2 = (1/2, 0, 1/2)
    assert np.allclose(t.probabilities, [0.5, 0.0, 0.5], atol=1e-14)


def test_single_rejects_bad_dim():
    with pytest.raises(DomainError):
        tomogram_single(maximally_mixed(4), Z)


def test_two_qubit_product_formulas(rng):
    rho = basis_projector(4, 0)
    for n1, n2 in zip(random_directions(rng, 20), random_directions(rng, 20)):
        t = tomogram_multi(rho, (n1, n2))
        c1, s1 = math.cos(n1.theta / 2) ** 2, math.sin(n1.theta / 2) ** 2
        c2, s2 = math.cos(n2.theta / 2) ** 2, math.sin(n2.theta / 2) ** 2
        assert abs(t.prob(1, 1) - c1 * c2) < 1e-12
        assert abs(t.prob(1, -1) - c1 * s2) < 1e-12
        assert abs(t.prob(-1, 1) - s1 * c2) < 1e-12
        assert abs(t.prob(-1, -1) - s1 * s2) < 1e-12


def test_product_state_tomogram_factorizes(rng):
    a, b = random_state(2, rng), random_state(2, rng)
    dirs = random_directions(rng, 2)
    t = tomogram_multi(product_state(a, b), dirs)
    expected = np.outer(tomogram_single(a, dirs[0]).probabilities, tomogram_single(b, dirs[1]).probabilities)
    assert np.max(np.abs(t.probabilities - expected)) < 1e-12
    assert is_factorized(t, 1e-12)


def test_singlet_parallel_anticorrelation(rng):
    for n in random_directions(rng, 10):
        t = tomogram_multi(werner(2, -1), (n, n))
        assert abs(t.prob(1, 1)) < 1e-15
        assert not is_factorized(t, 1e-6)


def test_is_factorized_uniform_and_party_check():
    t = tomogram_multi(maximally_mixed(4), (X, Z))
    assert is_factorized(t)
    with pytest.raises(ShapeError):
        is_factorized(tomogram_single(maximally_mixed(2), X))


@pytest.mark.parametrize("dim,parties", [(4, 2), (9, 2), (8, 3), (27, 3)])
def test_multi_matches_brute_force_and_rotation_route(rng, dim, parties):
    levels = 2 if dim in (4, 8) else 3
    for _ in range(5):
        rho = random_state(dim, rng)
        dirs = random_directions(rng, parties)
        t = tomogram_multi(rho, dirs)
        projs = [projector_stack(levels, d.cartesian) for d in dirs]
        for idx in np.ndindex(*t.outcomes_per_party):
            brute = brute_tomogram(rho.matrix, [projs[i][idx[i]] for i in range(parties)])
            assert abs(t.probabilities[idx] - brute) < 1e-12
        assert np.max(np.abs(tomogram_by_rotation(rho, dirs) - t.probabilities)) < 1e-12


def test_marginals_consistent(rng):
    rho = random_state(4, rng)
    dirs = random_directions(rng, 2)
    t = tomogram_multi(rho, dirs)
    for p in range(2):
        assert np.allclose(t.marginal(p), tomogram_single(_partial(rho.matrix, p), dirs[p]).probabilities, atol=1e-12)


def _partial(m, keep):
    r = m.reshape(2, 2, 2, 2)
    from spintomo.states import DensityMatrix

    return DensityMatrix(np.einsum("abcb->ac", r) if keep == 0 else np.einsum("abad->bd", r))


def test_psi_independence(rng):
    for _ in range(20):
        rho = random_state(4, rng)
        dirs = random_directions(rng, 2)
        base = tomogram_by_rotation(rho, dirs, psi=0.0)
        assert np.max(np.abs(tomogram_by_rotation(rho, dirs, psi=rng.uniform(0, 7)) - base)) < 1e-12


def test_tomogram_validation():
    with pytest.raises(InvariantError):
        Tomogram((X,), np.array([0.7, 0.7]))
    with pytest.raises(InvariantError):
        Tomogram((X,), np.array([1.1, -0.1]))
    t = Tomogram((X,), np.array([1 + 5e-13, -5e-13]))
    assert t.probabilities[1] == 0.0
    with pytest.raises(ShapeError):
        Tomogram((X, Y), np.array([0.5, 0.5]))


# --- closed forms ----------------------------------------------------------


def test_two_qubit_closed_examples(rng):
    mixed = bloch_decompose(maximally_mixed(4))
    n1, n2 = random_directions(rng, 2)
    assert abs(two_qubit_tomo_closed(mixed, 1, -1, n1, n2) - 0.25) < 1e-15
    for phi in np.linspace(-1, 1, 9):
        b = bloch_decompose(werner(2, phi))
        for m1 in (1, -1):
            for m2 in (1, -1):
                expected = 0.25 * (1 + (2 * phi - 1) / 3 * m1 * m2 * float(n1.cartesian @ n2.cartesian))
                assert abs(two_qubit_tomo_closed(b, m1, m2, n1, n2) - expected) < 1e-12
                assert abs(werner_qubit_tomo_closed(phi, m1, m2, n1, n2) - expected) < 1e-15


def test_two_qubit_closed_matches_trace(rng):
    for _ in range(200):
        rho = random_state(4, rng)
        n1, n2 = random_directions(rng, 2)
        m1, m2 = rng.choice([1, -1], size=2)
        brute = brute_tomogram(rho.matrix, [dequantizer_qubit(m1, n1).matrix, dequantizer_qubit(m2, n2).matrix])
        assert abs(two_qubit_tomo_closed(bloch_decompose(rho), m1, m2, n1, n2) - brute) < 1e-12


def test_qutrit_closed_examples(rng):
    n1, n2 = random_directions(rng, 2)
    for m1 in (1, 0, -1):
        for m2 in (1, 0, -1):
            assert abs(werner_qutrit_tomo_closed(1 / 3, m1, m2, n1, n2) - 1 / 9) < 1e-15
    for phi in (-1, -0.2, 0.6):
        assert abs(werner_qutrit_tomo_closed(phi, 0, 0, X, Y) - (3 - phi) / 24) < 1e-15
    with pytest.raises(DomainError):
        werner_qutrit_tomo_closed(2.0, 0, 0, X, Y)


def test_qutrit_closed_matches_trace_and_normalizes(rng):
    for _ in range(200):
        phi = rng.uniform(-1, 1)
        n1, n2 = random_directions(rng, 2)
        m1, m2 = rng.choice([1, 0, -1], size=2)
        brute = brute_tomogram(
            werner(3, phi).matrix, [dequantizer_qutrit(m1, n1).matrix, dequantizer_qutrit(m2, n2).matrix]
        )
        assert abs(werner_qutrit_tomo_closed(phi, m1, m2, n1, n2) - brute) < 1e-12
        total = sum(werner_qutrit_tomo_closed(phi, a, b, n1, n2) for a in (1, 0, -1) for b in (1, 0, -1))
        assert abs(total - 1) < 1e-12


# --- serialization ---------------------------------------------------------


def test_tomogram_json_and_csv_round_trip(rng):
    for dim in (2, 3, 4, 9):
        parties = 1 if dim < 4 else 2
        t = tomogram_multi(random_state(dim, rng), random_directions(rng, parties))
        back = Tomogram.from_json(t.to_json())
        assert back.directions == t.directions
        assert np.array_equal(back.probabilities, t.probabilities)
        (csv_back,) = tomograms_from_csv(t.to_csv())
        assert csv_back.directions == t.directions
        assert np.array_equal(csv_back.probabilities, t.probabilities)


def test_half_label_csv():
    t = tomogram_single(basis_projector(2, 0), Z)
    text = t.to_csv(half_labels=True)
    assert "1/2" in text and "-1/2" in text
    (back,) = tomograms_from_csv(text)
    assert back.prob(1) == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_normalization_positivity_property(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.choice([2, 3, 4, 9]))
    parties = 1 if dim < 4 else 2
    t = tomogram_multi(random_state(dim, rng, rank=int(rng.integers(1, dim + 1))), random_directions(rng, parties))
    assert abs(t.probabilities.sum() - 1) < 1e-10
    assert t.probabilities.min() >= 0
