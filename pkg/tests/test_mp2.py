import math

import numpy as np
import pytest

from qucc.determinant import ContractViolation
from qucc.engine import UccEngine
from qucc.hamiltonian import matrix_element
from qucc.integrals import orbital_energies
from qucc.mp2 import TIE_TOLERANCE, RankedEntry, mp2_amplitudes, mp2_energy, partition, rank

from conftest import LABELS, REFERENCE, hf_det, load


def test_h2_closed_form():
    ints = load("h2_0.7414")
    eps = orbital_energies(ints, hf_det(ints))
    k = ints.eri(0, 1, 0, 1)
    expect = k * k / (2 * (eps[0] - eps[1]))
    assert mp2_energy(ints, hf_det(ints)) == pytest.approx(expect, abs=1e-14)
    ranked = mp2_amplitudes(ints, hf_det(ints))
    assert [e.excitation.rank for e in ranked] == [2, 1, 1]
    assert abs(ranked[0].amplitude) == pytest.approx(k / (2 * (eps[1] - eps[0])), abs=1e-14)


@pytest.mark.parametrize("label", LABELS)
def test_matches_external_reference(label):
    ints = load(label)
    assert mp2_energy(ints, hf_det(ints)) == pytest.approx(REFERENCE[label]["e_mp2_corr"], abs=1e-8)


@pytest.mark.parametrize("label", ["h4_1.00", "h6_1.60", "beh2_1.00"])
def test_two_summation_forms_agree(label):
    # sum over unique doubles of t * s * <D|H|ref>  ==  1/4 sum over all ijab
    ints = load(label)
    ref = hf_det(ints)
    total = 0.0
    for e in mp2_amplitudes(ints, ref):
        if e.excitation.rank == 2:
            target, sign = e.excitation.excite(ref)
            total += e.amplitude * sign * matrix_element(target, ref, ints)
    assert total == pytest.approx(mp2_energy(ints, ref), abs=1e-12)


def test_amplitude_sign_follows_energy_gradient():
    # dE/dtheta at theta=0 is 2 * s * <D|H|ref> = 2 * t * denominator
    ints = load("h6_0.80")
    ref = hf_det(ints)
    eps = orbital_energies(ints, ref)
    ranked = mp2_amplitudes(ints, ref)
    doubles = [e for e in ranked if e.excitation.rank == 2][:20]
    engine = UccEngine(ints, ref)
    _, grad = engine.energy_and_gradient([e.excitation for e in doubles], np.zeros(len(doubles)))
    for e, g in zip(doubles, grad):
        x = e.excitation
        denom = sum(eps[i] for i in x.occupied) - sum(eps[a] for a in x.virtual)
        assert g == pytest.approx(2 * e.amplitude * denom, abs=1e-12)
        assert e.amplitude * g <= 0.0


@pytest.mark.parametrize("label", ["h6_1.60", "h8_0.80", "beh2_2.40"])
def test_ranking_order(label):
    ints = load(label)
    ranked = mp2_amplitudes(ints, hf_det(ints))
    n2 = sum(e.excitation.rank == 2 for e in ranked)
    assert all(e.excitation.rank == 2 for e in ranked[:n2])
    assert all(e.amplitude == 0.0 for e in ranked[n2:])
    mags = [abs(e.amplitude) for e in ranked[:n2]]
    assert all(a >= b - TIE_TOLERANCE for a, b in zip(mags, mags[1:]))
    for a, b in zip(ranked[:n2], ranked[1:n2]):
        if abs(abs(a.amplitude) - abs(b.amplitude)) <= TIE_TOLERANCE:
            assert a.canonical_index < b.canonical_index
    assert sorted(e.canonical_index for e in ranked) == list(range(len(ranked)))
    assert all(e.seed_angle == math.atan(e.amplitude) for e in ranked)


def test_rank_is_stable_under_input_order():
    ints = load("h6_2.40")
    ranked = mp2_amplitudes(ints, hf_det(ints))
    assert rank(ranked[::-1]) == ranked


def test_ties_broken_by_canonical_index():
    from qucc.determinant import Excitation
    a = RankedEntry(Excitation((3, 2), (7, 6)), 0.1, math.atan(0.1), 5)
    b = RankedEntry(Excitation((3, 1), (7, 6)), -0.1 + 1e-12, math.atan(-0.1), 2)
    c = RankedEntry(Excitation((3,), (7,)), 0.0, 0.0, 0)
    assert [e.canonical_index for e in rank([a, b, c])] == [2, 5, 0]


def test_partition():
    ints = load("h4_1.00")
    ranked = mp2_amplitudes(ints, hf_det(ints))
    large, small = partition(ranked, 5)
    assert [f.angle for f in large] == [e.seed_angle for e in ranked[:5]]
    assert all(f.angle == 0.0 for f in small) and len(small) == 21
    with pytest.raises(ContractViolation):
        partition(ranked, 27)
