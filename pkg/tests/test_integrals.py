import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qucc.integrals import (
    FcidumpError,
    hf_energy,
    orbital_energies,
    pair_index,
    parse_fcidump,
    read_fcidump,
    serialize_fcidump,
    with_core_energy,
)

from conftest import FIXTURES, LABELS, REFERENCE, hf_det, load

H2_TEXT = """ &FCI NORB=2,NELEC=2,MS2=0,
  ORBSYM=1,1,
  ISYM=1,
 &END
 0.6744887663568376 1 1 1 1
 0.1812888082114958 2 1 2 1
 0.6634680964235676 2 2 1 1
 0.6973937674230266 2 2 2 2
 -1.2528596188483982 1 1 0 0
 -0.4756836223296575 2 2 0 0
 0.7137539936876182 0 0 0 0
"""


def test_parse_small():
    ints = parse_fcidump(H2_TEXT)
    assert (ints.n_spatial, ints.n_electrons, ints.ms2) == (2, 2, 0)
    assert ints.eri(0, 1, 0, 1) == ints.eri(1, 0, 1, 0) == 0.1812888082114958
    assert ints.eri(0, 0, 1, 1) == ints.eri(1, 1, 0, 0) == 0.6634680964235676
    assert ints.one_body[1, 1] == -0.4756836223296575
    assert ints.core_energy == 0.7137539936876182


def test_slash_terminator_and_orbital_energy_lines():
    text = H2_TEXT.replace(" &END", " /") + " -0.57 1 0 0 0\n"
    a = parse_fcidump(text)
    b = parse_fcidump(H2_TEXT)
    np.testing.assert_array_equal(a.two_body_packed, b.two_body_packed)
    assert a.core_energy == b.core_energy


@pytest.mark.parametrize("bad,line,fragment", [
    (H2_TEXT.replace(" 0.6974", " 0.6974").replace("2 2 2 2", "3 2 2 2"), 8, "out of range"),
    (H2_TEXT + " 0.5 1 1 1 1\n", 12, "inconsistent duplicate"),
    (H2_TEXT + " 0.5 1 1\n", 12, "expected"),
    (H2_TEXT + " abc 1 1 0 0\n", 12, "unparseable"),
])
def test_parse_errors_carry_line_numbers(bad, line, fragment):
    with pytest.raises(FcidumpError) as info:
        parse_fcidump(bad, source="x.fcidump")
    assert info.value.lineno == line
    assert fragment in str(info.value)
    assert "x.fcidump" in str(info.value)


def test_header_errors():
    with pytest.raises(FcidumpError, match="&FCI"):
        parse_fcidump("NORB=2\n")
    with pytest.raises(FcidumpError, match="unterminated"):
        parse_fcidump(" &FCI NORB=2,NELEC=2,\n 0.1 1 1 1 1\n")
    with pytest.raises(FcidumpError, match="NELEC"):
        parse_fcidump(" &FCI NORB=2,\n &END\n")


def test_consistent_duplicate_accepted():
    ints = parse_fcidump(H2_TEXT + " 0.1812888082114958 1 2 1 2\n")
    assert ints.eri(0, 1, 0, 1) == 0.1812888082114958


@pytest.mark.parametrize("label", ["h2_0.7414", "h4_1.00", "beh2_1.75"])
def test_roundtrip(label):
    ints = load(label)
    again = parse_fcidump(io.StringIO(serialize_fcidump(ints)))
    np.testing.assert_array_equal(again.two_body_packed, ints.two_body_packed)
    np.testing.assert_array_equal(again.one_body, ints.one_body)
    assert again.core_energy == ints.core_energy


def test_eightfold_symmetry():
    ints = load("h4_1.00")
    g = ints.two_body
    for perm in ("qprs", "pqsr", "rspq", "srqp", "qpsr", "rsqp", "srpq"):
        np.testing.assert_array_equal(g, np.einsum("pqrs->" + perm, g))


def test_antisymmetrized_tensor():
    ints = load("h4_1.00")
    a = ints.antisym
    np.testing.assert_array_equal(a, -a.transpose(1, 0, 2, 3))
    np.testing.assert_array_equal(a, -a.transpose(0, 1, 3, 2))
    np.testing.assert_allclose(a, a.transpose(2, 3, 0, 1), atol=0, rtol=0)
    m = ints.n_spatial
    # <p_a q_b || r_a s_b> = (pr|qs) with no exchange between opposite spins
    for p, q, r, s in [(0, 1, 2, 3), (1, 1, 0, 2), (3, 0, 3, 0)]:
        assert a[p, q + m, r, s + m] == ints.eri(p, r, q, s)
        assert a[p, q, r, s] == ints.eri(p, r, q, s) - ints.eri(p, s, q, r)
        assert a[p, q + m, r + m, s] == -ints.eri(p, s, q, r)


@given(st.integers(0, 30), st.integers(0, 30))
def test_pair_index_symmetric_and_dense(p, q):
    assert pair_index(p, q) == pair_index(q, p)
    hi, lo = max(p, q), min(p, q)
    assert pair_index(p, q) == hi * (hi + 1) // 2 + lo


def test_pair_index_bijective():
    seen = {pair_index(p, q) for p in range(12) for q in range(p + 1)}
    assert seen == set(range(78))


@pytest.mark.parametrize("label", LABELS)
def test_hf_energy_and_orbital_energies(label):
    ints = load(label)
    ref = hf_det(ints)
    data = REFERENCE[label]
    assert hf_energy(ints, ref) == pytest.approx(data["e_hf"], abs=1e-8)
    eps = orbital_energies(ints, ref)
    m = ints.n_spatial
    np.testing.assert_allclose(eps[:m], data["mo_energy"], atol=1e-8)
    np.testing.assert_allclose(eps[m:], data["mo_energy"], atol=1e-8)


@pytest.mark.parametrize("label", LABELS)
def test_core_energy_is_nuclear_repulsion(label):
    ints = load(label)
    assert ints.core_energy == pytest.approx(REFERENCE[label]["nuclear_repulsion"], abs=1e-12)
    # supplying the same value again must not double count
    assert with_core_energy(ints, ints.core_energy).core_energy == ints.core_energy
    with pytest.raises(FcidumpError):
        with_core_energy(ints, ints.core_energy + 1.0)


def test_external_core_energy_added_once():
    text = "\n".join(l for l in H2_TEXT.splitlines() if not l.strip().endswith("0 0 0 0"))
    ints = parse_fcidump(text)
    assert ints.core_energy == 0.0
    assert with_core_energy(ints, 0.7137539936876182).core_energy == 0.7137539936876182


def test_unique_counts_h10():
    one, two = read_fcidump(FIXTURES / "h10_1.00.fcidump").unique_counts()
    assert one <= 100 and two <= 1540
