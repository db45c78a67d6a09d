"""MP2 doubles amplitudes used to rank and seed UCC factors.

Amplitudes are expressed in the factor's own operator convention: for the
double ``T = a+_a a+_b a_i a_j`` with ``T|ref> = s|D>`` the first-order
coefficient of ``|D>`` is ``<D|H|ref> / (e_i + e_j - e_a - e_b)`` and the
amplitude is ``s`` times that, so a factor at ``theta = t`` reproduces the
first-order wavefunction. Singles carry amplitude zero (Brillouin) and rank
after every double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .ansatz import UccFactor
from .determinant import ContractViolation, Determinant, Excitation, enumerate_excitations, occupied
from .hamiltonian import matrix_element
from .integrals import IntegralSet, orbital_energies

# amplitudes closer than this are treated as tied, so symmetry-equivalent
# factors keep their canonical order regardless of round-off in the integrals
TIE_TOLERANCE = 1e-10


class DegenerateOrbitalsError(ValueError):
    pass


@dataclass(frozen=True)
class RankedEntry:
    excitation: Excitation
    amplitude: float
    seed_angle: float
    canonical_index: int


def _denominator(eps, exc: Excitation, tol: float = 1e-10) -> float:
    d = sum(eps[i] for i in exc.occupied) - sum(eps[a] for a in exc.virtual)
    if abs(d) < tol:
        raise DegenerateOrbitalsError(
            f"near-zero MP2 denominator {d:.3e} for {exc.occupied} -> {exc.virtual}"
        )
    return float(d)


def mp2_amplitudes(ints: IntegralSet, reference: Determinant) -> List[RankedEntry]:
    """All singles and doubles, sorted by descending ``|amplitude|``."""
    eps = orbital_energies(ints, reference)
    entries = []
    for n, exc in enumerate(enumerate_excitations(reference, ints.n_spatial, 2)):
        if exc.rank == 1:
            t = 0.0
        else:
            target, sign = exc.excite(reference)
            t = sign * matrix_element(target, reference, ints) / _denominator(eps, exc)
        entries.append(RankedEntry(exc, t, math.atan(t), n))
    return rank(entries)


def rank(entries: Sequence[RankedEntry]) -> List[RankedEntry]:
    """Order by ``|amplitude|`` (ties within ``TIE_TOLERANCE`` by canonical index),
    singles last."""
    doubles = sorted((e for e in entries if e.excitation.rank > 1),
                     key=lambda e: e.canonical_index)
    singles = sorted((e for e in entries if e.excitation.rank == 1),
                     key=lambda e: e.canonical_index)
    order = sorted(doubles, key=lambda e: -abs(e.amplitude))
    out: List[RankedEntry] = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and abs(order[i].amplitude) - abs(order[j].amplitude) <= TIE_TOLERANCE:
            j += 1
        out.extend(sorted(order[i:j], key=lambda e: e.canonical_index))
        i = j
    return out + singles


def mp2_energy(ints: IntegralSet, reference: Determinant) -> float:
    """Second-order correlation energy ``1/4 sum |<ij||ab>|^2 / (e_i+e_j-e_a-e_b)``."""
    occ = occupied(reference)
    vir = [p for p in range(ints.n_spin_orbitals) if p not in set(occ)]
    if not occ or not vir:
        return 0.0
    eps = orbital_energies(ints, reference)
    g = ints.antisym[np.ix_(occ, occ, vir, vir)]
    denom = (eps[occ][:, None, None, None] + eps[occ][None, :, None, None]
             - eps[vir][None, None, :, None] - eps[vir][None, None, None, :])
    mask = g != 0.0
    if np.any(np.abs(denom[mask]) < 1e-10):
        raise DegenerateOrbitalsError("near-zero MP2 denominator")
    return float(0.25 * np.sum(np.where(mask, g * g / np.where(mask, denom, 1.0), 0.0)))


def partition(ranked: Sequence[RankedEntry], n_large: int):
    """Split into ``(large, small)`` factor lists; large factors carry seed angles."""
    if not 0 <= n_large <= len(ranked):
        raise ContractViolation(f"L={n_large} outside 0..{len(ranked)}")
    large = [UccFactor(e.excitation, e.seed_angle) for e in ranked[:n_large]]
    small = [UccFactor(e.excitation, 0.0) for e in ranked[n_large:]]
    return large, small
