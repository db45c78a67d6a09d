import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qucc.determinant import ContractViolation, excitation_degree
from qucc.hamiltonian import (
    apply_hamiltonian,
    connections,
    diagonal_element,
    expectation,
    matrix_element,
)
from qucc.sector import SectorBasis, SectorHamiltonian

from conftest import hf_det, load
from oracles import fock_space_hamiltonian, sector_dets, slater_condon_matrix


@pytest.mark.parametrize("label", ["h2_0.7414", "h4_1.00"])
def test_slater_condon_oracle_matches_fock_space(label):
    ints = load(label)
    dets = sector_dets(ints.n_spatial, ints.n_alpha, ints.n_beta)
    full = fock_space_hamiltonian(ints)
    np.testing.assert_allclose(slater_condon_matrix(ints, dets), full[np.ix_(dets, dets)],
                               atol=1e-13, rtol=0)


def test_h2_sector_by_hand():
    ints = load("h2_0.7414")
    # closed-shell 2x2 block {|1a1b>, |2a2b>}: diag h11*2+(11|11), h22*2+(22|22); coupling (12|12)
    h, g = ints.one_body, ints.eri
    e1 = 2 * h[0, 0] + g(0, 0, 0, 0) + ints.core_energy
    e2 = 2 * h[1, 1] + g(1, 1, 1, 1) + ints.core_energy
    k = g(0, 1, 0, 1)
    low = 0.5 * (e1 + e2) - np.hypot(0.5 * (e1 - e2), k)
    lowest = np.linalg.eigvalsh(slater_condon_matrix(ints))[0]
    assert lowest == pytest.approx(low, abs=1e-12)
    assert lowest == pytest.approx(-1.1372701746609035, abs=1e-9)


@pytest.mark.parametrize("label", ["h2_0.7414", "h4_1.00", "h6_0.80"])
def test_apply_matches_brute_force(label):
    ints = load(label)
    dets = sector_dets(ints.n_spatial, ints.n_alpha, ints.n_beta)
    mat = slater_condon_matrix(ints, dets)
    rng = np.random.default_rng(7)
    vec = rng.standard_normal(len(dets))
    out = apply_hamiltonian(dict(zip(dets, vec)), ints)
    got = np.array([out.get(d, 0.0) for d in dets])
    np.testing.assert_allclose(got, mat @ vec, atol=1e-12, rtol=0)
    assert set(out) <= set(dets)


@pytest.mark.parametrize("label", ["h4_1.00", "h6_1.60", "beh2_1.00"])
def test_sector_engine_matches_dict_path(label):
    ints = load(label)
    basis = SectorBasis(ints.n_spatial, ints.n_alpha, ints.n_beta)
    ham = SectorHamiltonian(ints, basis)
    rng = np.random.default_rng(3)
    x = rng.standard_normal((basis.dimension, 3))
    y = ham(x)
    for k in range(3):
        ref = basis.to_dense(apply_hamiltonian(basis.to_sparse(x[:, k]), ints))
        np.testing.assert_allclose(y[:, k], ref, atol=1e-12, rtol=0)
    np.testing.assert_allclose(ham.diagonal, [diagonal_element(int(d), ints) for d in basis.dets],
                               atol=1e-12)
    np.testing.assert_allclose(ham.dense_matrix() @ x, y, atol=1e-12)


def test_threaded_application_is_identical():
    ints = load("h6_1.20")
    x = np.random.default_rng(0).standard_normal((400, 9))
    a = SectorHamiltonian(ints)(x, block=2)
    b = SectorHamiltonian(ints, threads=3)(x, block=2)
    np.testing.assert_array_equal(a, b)


def _random_det(draw, m, na, nb):
    a = draw(st.lists(st.integers(0, m - 1), min_size=na, max_size=na, unique=True))
    b = draw(st.lists(st.integers(0, m - 1), min_size=nb, max_size=nb, unique=True))
    return sum(1 << p for p in a) | sum(1 << (p + m) for p in b)


@st.composite
def h6_det_pair(draw):
    return _random_det(draw, 6, 3, 3), _random_det(draw, 6, 3, 3)


@settings(max_examples=200, deadline=None)
@given(h6_det_pair())
def test_hermitian_and_sparse_support(pair):
    ints = load("h6_0.80")
    bra, ket = pair
    assert matrix_element(bra, ket, ints) == pytest.approx(matrix_element(ket, bra, ints), abs=1e-14)
    if excitation_degree(bra, ket) > 2:
        assert matrix_element(bra, ket, ints) == 0.0
    out = apply_hamiltonian({ket: 1.0}, ints)
    assert all(excitation_degree(d, ket) <= 2 for d in out)
    assert out.get(bra, 0.0) == pytest.approx(matrix_element(bra, ket, ints), abs=1e-14)


def test_connections_exclude_diagonal():
    ints = load("h4_1.00")
    ref = hf_det(ints)
    targets = [t for t, _ in connections(ref, ints)]
    assert ref not in targets and len(targets) == len(set(targets))


def test_expectation_of_reference_is_hf():
    from qucc.integrals import hf_energy
    ints = load("beh2_0.00")
    ref = hf_det(ints)
    assert expectation({ref: 2.0}, ints) == pytest.approx(hf_energy(ints, ref), abs=1e-12)


def test_sector_checks():
    ints = load("h4_1.00")
    with pytest.raises(ContractViolation):
        apply_hamiltonian({0b1: 1.0}, ints)
    with pytest.raises(ContractViolation):
        apply_hamiltonian({}, ints)
    with pytest.raises(ContractViolation):
        SectorHamiltonian(ints)(np.zeros(5))


def test_drop_tolerance_and_ordering():
    ints = load("h4_1.00")
    ref = hf_det(ints)
    full = apply_hamiltonian({ref: 1.0}, ints)
    assert list(full) == sorted(full)
    small = apply_hamiltonian({ref: 1.0}, ints, drop_tol=1e-3)
    assert set(small) <= set(full)
    assert all(abs(c) > 1e-3 for c in small.values())
