import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdlab.qcore import (
    I2,
    DensityMatrix,
    DeviationMatrix,
    InvalidStateError,
    bell_state,
    eigendecompose,
    entropy_deficit_of,
    from_pauli_components,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    pauli,
    pauli_components,
    ptrace,
    random_density_matrix,
    random_traceless_hermitian,
    random_unitary,
    shannon_entropy,
    spin_operators,
    tensor,
    von_neumann_entropy,
)

seeds = st.integers(0, 2**32 - 1)


def test_pauli_basics():
    assert np.array_equal(pauli(3), np.diag([1, -1]))
    for k in (1, 2, 3):
        assert np.allclose(pauli(k) @ pauli(k), I2)
        assert abs(np.trace(pauli(k))) == 0
    with pytest.raises(ValueError):
        pauli(0)
    with pytest.raises(ValueError):
        pauli(4)


def test_tensor_examples():
    assert np.array_equal(tensor(I2, I2), np.eye(4))
    assert sorted(np.linalg.eigvalsh(tensor(pauli(3), I2))) == [-1, -1, 1, 1]
    xx = tensor(pauli(1), pauli(1))
    # |00> <-> |11>, |01> <-> |10>
    perm = np.zeros((4, 4))
    perm[3, 0] = perm[0, 3] = perm[2, 1] = perm[1, 2] = 1
    assert np.array_equal(xx, perm)


@given(seeds)
def test_tensor_bilinear(seed):
    rng = np.random.default_rng(seed)
    a1, a2, b = (rng.normal(size=(2, 2)) for _ in range(3))
    x, y = rng.normal(size=2)
    assert np.allclose(tensor(x * a1 + y * a2, b), x * tensor(a1, b) + y * tensor(a2, b))


def test_density_validation():
    DensityMatrix(np.eye(4) / 4)
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.eye(4) / 2)
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([1.5, -0.5, 0, 0]))
    bad = np.eye(4) / 4 + 0.1j * np.triu(np.ones((4, 4)), 1)
    with pytest.raises(InvalidStateError):
        DensityMatrix(bad)
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(3) / 3, dims=(2, 2))


def test_density_is_immutable():
    rho = DensityMatrix(np.eye(4) / 4)
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1.0


def test_deviation_validation():
    d = DeviationMatrix(tensor(pauli(3), pauli(3)) / 4)
    assert isinstance(d.to_density(), DensityMatrix)
    with pytest.raises(InvalidStateError):
        DeviationMatrix(np.eye(4))
    with pytest.raises(InvalidStateError):
        # I/4 + eps*delta not positive
        DeviationMatrix(tensor(pauli(3), I2), epsilon=0.3)
    rho = bell_state("phi+")
    back = DeviationMatrix.from_density(rho, 0.1)
    assert np.allclose(back.to_density().mat, rho.mat)


def test_partial_trace_examples():
    rng = np.random.default_rng(3)
    ra, rb = random_density_matrix(2, rng), random_density_matrix(2, rng)
    prod = DensityMatrix(tensor(ra.mat, rb.mat))
    assert np.allclose(partial_trace(prod, "A").mat, ra.mat, atol=1e-9)
    assert np.allclose(partial_trace(prod, 1).mat, rb.mat, atol=1e-9)
    assert np.allclose(partial_trace(bell_state("phi+"), "A").mat, I2 / 2)
    c = (0.06, 0.3, 0.33)
    m = (np.eye(4) + sum(ci * tensor(pauli(k + 1), pauli(k + 1)) for k, ci in enumerate(c))) / 4
    for side in ("A", "B"):
        assert np.allclose(partial_trace(DensityMatrix(m), side).mat, I2 / 2)
    with pytest.raises(IndexError):
        partial_trace(prod, 2)


@given(seeds)
def test_partial_trace_linear(seed):
    rng = np.random.default_rng(seed)
    m1, m2 = rng.normal(size=(2, 4, 4)) + 1j * rng.normal(size=(2, 4, 4))
    for keep in (0, 1):
        assert np.allclose(ptrace(2 * m1 - m2, (2, 2), keep), 2 * ptrace(m1, (2, 2), keep) - ptrace(m2, (2, 2), keep))


def test_entropy_examples():
    assert von_neumann_entropy(bell_state("psi-")) == pytest.approx(0, abs=1e-12)
    assert von_neumann_entropy(DensityMatrix(np.eye(4) / 4)) == pytest.approx(2, abs=1e-12)
    assert von_neumann_entropy(DensityMatrix(np.diag([0.5, 0.5, 0, 0]))) == pytest.approx(1, abs=1e-12)
    assert shannon_entropy([0.5, 0.5, 0.0]) == pytest.approx(1.0)


@settings(max_examples=60)
@given(seeds)
def test_entropy_unitary_invariant(seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(4, rng)
    u = random_unitary(4, rng)
    s1 = von_neumann_entropy(rho)
    s2 = von_neumann_entropy(DensityMatrix(u @ rho.mat @ u.conj().T))
    assert abs(s1 - s2) <= 1e-9
    assert -1e-12 <= s1 <= 2 + 1e-12


def test_entropy_deficit_near_mixed():
    # S = 2 - deficit keeps relative accuracy for eps = 1e-6 perturbations
    delta = tensor(pauli(3), pauli(3)) / 4
    eps = 1e-6
    rho = np.eye(4) / 4 + eps * delta
    expected = eps**2 * 2 * np.trace(delta @ delta).real / math.log(2)
    assert entropy_deficit_of(rho) == pytest.approx(expected, rel=1e-5)


def test_eigendecompose_examples():
    w, v = eigendecompose(np.diag([3.0, 1.0]))
    assert np.allclose(w, [3, 1]) and np.allclose(np.abs(v), np.eye(2))
    w, _ = eigendecompose(pauli(1))
    assert np.allclose(w, [1, -1])
    c = (0.06, 0.3, 0.33)
    m = (np.eye(4) + sum(ci * tensor(pauli(k + 1), pauli(k + 1)) for k, ci in enumerate(c))) / 4
    w, _ = eigendecompose(m)
    assert w.sum() == pytest.approx(1) and np.all(w >= 0)
    assert np.all(np.diff(w) <= 0)
    with pytest.raises(ValueError):
        eigendecompose(np.array([[0, 1], [0, 0]]))


def test_eigendecompose_reconstruction_1000():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = g + g.conj().T
        w, v = eigendecompose(h)
        worst = max(worst, np.max(np.abs(h - v @ np.diag(w) @ v.conj().T)))
    assert worst <= 1e-9


def test_eigendecompose_ties_stable():
    w, v = eigendecompose(np.eye(3))
    assert np.array_equal(np.abs(v), np.eye(3))


@pytest.mark.parametrize("spin", [Fraction(1, 2), Fraction(3, 2)])
def test_spin_operators(spin):
    s = spin_operators(spin)
    sf = float(spin)
    assert np.allclose(s.iz, np.diag(sf - np.arange(int(2 * sf) + 1)))
    assert np.allclose(s.ix @ s.iy - s.iy @ s.ix, 1j * s.iz, atol=1e-9)
    assert np.allclose(s.isq, sf * (sf + 1) * np.eye(len(s.iz)), atol=1e-9)


def test_spin_operators_reject():
    with pytest.raises(ValueError):
        spin_operators(1)


@given(seeds)
def test_pauli_components_roundtrip(seed):
    rho = random_density_matrix(4, np.random.default_rng(seed))
    a, b, t = pauli_components(rho.mat)
    assert np.allclose(from_pauli_components(a, b, t), rho.mat, atol=1e-12)


def test_random_traceless_hermitian_norm():
    m = random_traceless_hermitian(4, np.random.default_rng(0), norm=2.0)
    assert abs(np.trace(m)) < 1e-12
    assert np.linalg.norm(m) == pytest.approx(2.0)


@given(seeds)
def test_matrix_json_roundtrip_exact(seed):
    m = random_density_matrix(4, np.random.default_rng(seed)).mat
    back = matrix_from_json(json.loads(json.dumps(matrix_to_json(m))))
    assert np.array_equal(back, m)


def test_matrix_json_malformed():
    with pytest.raises(ValueError):
        matrix_from_json({"dim": 2, "re": [1, 0, 0]})
    with pytest.raises(ValueError):
        matrix_from_json({"re": []})
