from functools import reduce
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qucc.determinant import (
    ContractViolation,
    Excitation,
    apply_second_quantized,
    enumerate_excitations,
    excitation_degree,
    from_occupied,
    hartree_fock,
    occupied,
    spin_counts,
)

N_SO = 6


def jw_annihilator(p, n):
    """Jordan-Wigner matrix of a_p on the 2**n occupation basis (bit p = orbital p)."""
    z = np.diag([1.0, -1.0])
    low = np.array([[0.0, 1.0], [0.0, 0.0]])
    eye = np.eye(2)
    # kron order: highest orbital first so the basis index equals the bitmask
    ops = [eye] * (n - 1 - p) + [low] + [z] * p
    return reduce(np.kron, ops) if ops else np.eye(1)


A = [jw_annihilator(p, N_SO) for p in range(N_SO)]


def jw_apply(det, creators, annihilators):
    v = np.zeros(2 ** N_SO)
    v[det] = 1.0
    for q in reversed(annihilators):
        v = A[q] @ v
    for q in reversed(creators):
        v = A[q].T @ v
    return v


orbitals = st.lists(st.integers(0, N_SO - 1), min_size=0, max_size=3)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2 ** N_SO - 1), orbitals, orbitals)
def test_matches_jordan_wigner(det, creators, annihilators):
    v = jw_apply(det, creators, annihilators)
    got = apply_second_quantized(det, creators, annihilators)
    if got is None:
        assert not v.any()
    else:
        new, sign = got
        expect = np.zeros_like(v)
        expect[new] = sign
        np.testing.assert_array_equal(v, expect)


@given(st.integers(0, 2 ** N_SO - 1), st.integers(0, N_SO - 1), st.integers(0, N_SO - 1))
def test_anticommutator(det, p, q):
    # (a_p a+_q + a+_q a_p)|det> = delta_pq |det>
    total = {}
    for cre, ann in (((), (p,)), ((q,), ())), (((q,), ()), ((), (p,))):
        r = apply_second_quantized(det, *cre)
        if r is None:
            continue
        r2 = apply_second_quantized(r[0], *ann)
        if r2 is None:
            continue
        total[r2[0]] = total.get(r2[0], 0) + r[1] * r2[1]
    total = {k: v for k, v in total.items() if v}
    assert total == ({det: 1} if p == q else {})


@st.composite
def excitations_on(draw):
    det = draw(st.integers(0, 2 ** N_SO - 1).filter(lambda d: 0 < bin(d).count("1") < N_SO))
    occ = occupied(det)
    vir = [p for p in range(N_SO) if p not in occ]
    rank = draw(st.integers(1, min(2, len(occ), len(vir))))
    o = draw(st.lists(st.sampled_from(occ), min_size=rank, max_size=rank, unique=True))
    v = draw(st.lists(st.sampled_from(vir), min_size=rank, max_size=rank, unique=True))
    return det, Excitation(tuple(sorted(o, reverse=True)), tuple(sorted(v, reverse=True)))


@given(excitations_on())
def test_excite_deexcite_roundtrip(case):
    det, exc = case
    new, s1 = exc.excite(det)
    assert excitation_degree(det, new) == exc.rank
    back, s2 = exc.deexcite(new)
    assert back == det and s1 * s2 == 1
    assert exc.deexcite(det) is None
    assert exc.excite(new) is None


def test_excitation_validation():
    with pytest.raises(ContractViolation):
        Excitation((1, 2), (5, 4))
    with pytest.raises(ContractViolation):
        Excitation((2, 1), (2, 0))
    with pytest.raises(ContractViolation):
        Excitation((1,), (4, 3))


def test_occupied_helpers():
    d = from_occupied([0, 3, 5])
    assert occupied(d) == [0, 3, 5]
    assert spin_counts(hartree_fock(4, 2, 1), 4) == (2, 1)
    assert hartree_fock(2, 1, 1) == 0b0101


def closed_shell_counts(m, n_occ):
    v = m - n_occ
    singles = 2 * n_occ * v
    doubles = 2 * comb(n_occ, 2) * comb(v, 2) + (n_occ * v) ** 2
    return singles, doubles


@pytest.mark.parametrize("m,n_occ,expect", [
    (2, 1, (2, 1)), (6, 3, (18, 99)), (8, 4, (32, 328)), (10, 5, (50, 825)), (7, 3, (24, 180)),
])
def test_counts(m, n_occ, expect):
    excs = enumerate_excitations(hartree_fock(m, n_occ, n_occ), m)
    singles = sum(e.rank == 1 for e in excs)
    assert (singles, len(excs) - singles) == expect == closed_shell_counts(m, n_occ)


def test_canonical_order_and_spin():
    m = 4
    excs = enumerate_excitations(hartree_fock(m, 2, 2), m)
    assert excs == sorted(excs, key=lambda e: (e.rank, e.occupied, e.virtual))
    assert len(set(excs)) == len(excs)
    assert all(e.conserves_spin(m) for e in excs)
    assert enumerate_excitations(hartree_fock(m, 2, 2), m, max_rank=1) == [
        e for e in excs if e.rank == 1
    ]
