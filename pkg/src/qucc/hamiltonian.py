"""Matrix-free Hamiltonian action on sparse determinant expansions.

A ``SparseState`` is a ``dict`` mapping determinants (bitmask ints) to real
coefficients. Connections out of each source determinant are generated from
its own occupied/virtual lists with the Slater-Condon rules, so no many-body
matrix is ever formed.
"""

from __future__ import annotations

from typing import Dict, Iterator, Mapping, Tuple

from .determinant import ContractViolation, Determinant, apply_second_quantized, occupied, spin_counts
from .integrals import IntegralSet

SparseState = Dict[Determinant, float]


def check_sector(state: Mapping[Determinant, float], ints: IntegralSet) -> None:
    """Every determinant must carry the electron count and 2*S_z of ``ints``."""
    m = ints.n_spatial
    for det in state:
        if det >> (2 * m):
            raise ContractViolation(f"determinant {det:#x} exceeds {2 * m} spin orbitals")
        na, nb = spin_counts(det, m)
        if na + nb != ints.n_electrons or na - nb != ints.ms2:
            raise ContractViolation(
                f"determinant {det:#x} has (n_alpha, n_beta)=({na}, {nb}); "
                f"expected n_e={ints.n_electrons}, 2Sz={ints.ms2}"
            )


def diagonal_element(det: Determinant, ints: IntegralSet) -> float:
    occ = occupied(det)
    h = ints.one_body_spin
    g = ints.antisym
    e = ints.core_energy
    for n, i in enumerate(occ):
        e += h[i, i]
        for j in occ[:n]:
            e += g[i, j, i, j]
    return float(e)


def connections(det: Determinant, ints: IntegralSet) -> Iterator[Tuple[Determinant, float]]:
    """Yield ``(target, <target|H|det>)`` for every singly and doubly connected target.

    The diagonal is not included.
    """
    m = ints.n_spatial
    h = ints.one_body_spin
    g = ints.antisym
    occ = occupied(det)
    vir = [p for p in range(2 * m) if not det >> p & 1]
    for i in occ:
        for a in vir:
            if (i >= m) != (a >= m):
                continue
            elem = h[a, i] + sum(g[a, j, i, j] for j in occ)
            if elem == 0.0:
                continue
            target, sign = apply_second_quantized(det, (a,), (i,))
            yield target, sign * float(elem)
    for x, i in enumerate(occ):
        for j in occ[:x]:
            for y, a in enumerate(vir):
                for b in vir[:y]:
                    elem = g[a, b, i, j]
                    if elem == 0.0:
                        continue
                    # |target> = a+_a a+_b a_j a_i |det>, <target|H|det> = <ab||ij>
                    target, sign = apply_second_quantized(det, (a, b), (j, i))
                    yield target, sign * float(elem)


def apply_hamiltonian(state: Mapping[Determinant, float], ints: IntegralSet,
                      drop_tol: float = 0.0) -> SparseState:
    """Return ``H|state>`` as a new sparse state.

    Source determinants are visited in ascending order so accumulation is
    deterministic. Output coefficients with ``|c| <= drop_tol`` are removed
    when ``drop_tol > 0``.
    """
    if not state:
        raise ContractViolation("apply_hamiltonian needs a non-empty state")
    check_sector(state, ints)
    out: SparseState = {}
    for det in sorted(state):
        c = state[det]
        if c == 0.0:
            continue
        out[det] = out.get(det, 0.0) + diagonal_element(det, ints) * c
        for target, elem in connections(det, ints):
            out[target] = out.get(target, 0.0) + elem * c
    if drop_tol > 0.0:
        out = {d: c for d, c in out.items() if abs(c) > drop_tol}
    return dict(sorted(out.items()))


def inner(a: Mapping[Determinant, float], b: Mapping[Determinant, float]) -> float:
    if len(b) < len(a):
        a, b = b, a
    return float(sum(c * b[d] for d, c in sorted(a.items()) if d in b))


def expectation(state: Mapping[Determinant, float], ints: IntegralSet) -> float:
    """Rayleigh quotient ``<psi|H|psi> / <psi|psi>``."""
    if not state:
        raise ContractViolation("expectation of an empty state")
    norm = inner(state, state)
    if norm <= 0.0:
        raise ContractViolation("state has zero norm")
    return inner(state, apply_hamiltonian(state, ints)) / norm


def matrix_element(bra: Determinant, ket: Determinant, ints: IntegralSet) -> float:
    """``<bra|H|ket>`` straight from the Slater-Condon rules."""
    degree = (bra ^ ket).bit_count() // 2
    if degree == 0:
        return diagonal_element(ket, ints)
    if degree > 2:
        return 0.0
    h = ints.one_body_spin
    g = ints.antisym
    holes = occupied(ket & ~bra)
    parts = occupied(bra & ~ket)
    if degree == 1:
        (i,), (a,) = holes, parts
        occ = occupied(ket)
        elem = h[a, i] + sum(g[a, j, i, j] for j in occ)
        _, sign = apply_second_quantized(ket, (a,), (i,))
        return sign * float(elem)
    j, i = holes
    b, a = parts
    _, sign = apply_second_quantized(ket, (a, b), (j, i))
    return sign * float(g[a, b, i, j])
