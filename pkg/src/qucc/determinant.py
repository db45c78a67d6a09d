"""Slater determinants as occupation bitmasks.

Spin orbitals are laid out in blocks: indices ``0..M-1`` are the alpha spin
orbitals and ``M..2M-1`` the beta partners of the same spatial orbitals. A
determinant is a plain Python ``int`` whose bit ``p`` is set when spin orbital
``p`` is occupied; Python integers are unbounded so there is no width limit.

The phase convention: an operator string ``a+_a a+_b ... a_i a_j`` acts
right-to-left and every elementary creation or annihilation on orbital ``q``
contributes ``(-1)**n`` where ``n`` counts occupied orbitals strictly below
``q`` at the moment it acts.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence, Tuple

Determinant = int


class ContractViolation(ValueError):
    """Raised when an argument breaks a documented precondition."""


def occupied(det: Determinant) -> list[int]:
    """Ascending list of occupied spin-orbital indices."""
    out = []
    p = 0
    while det:
        if det & 1:
            out.append(p)
        det >>= 1
        p += 1
    return out


def from_occupied(indices: Iterable[int]) -> Determinant:
    det = 0
    for p in indices:
        det |= 1 << p
    return det


def hartree_fock(n_spatial: int, n_alpha: int, n_beta: int) -> Determinant:
    """Aufbau determinant: lowest ``n_alpha`` alpha and ``n_beta`` beta orbitals."""
    alpha = (1 << n_alpha) - 1
    beta = (1 << n_beta) - 1
    return alpha | (beta << n_spatial)


def spin_counts(det: Determinant, n_spatial: int) -> Tuple[int, int]:
    """Return ``(n_alpha, n_beta)`` for ``det``."""
    alpha_mask = (1 << n_spatial) - 1
    return (det & alpha_mask).bit_count(), (det >> n_spatial).bit_count()


def is_beta(p: int, n_spatial: int) -> bool:
    return p >= n_spatial


def apply_second_quantized(
    det: Determinant,
    creators: Sequence[int],
    annihilators: Sequence[int],
    n_spin_orbitals: Optional[int] = None,
) -> Optional[Tuple[Determinant, int]]:
    """Apply ``a+_{c0} a+_{c1} ... a_{a0} a_{a1} ...`` to ``det``.

    Returns ``(new_det, sign)`` or ``None`` when the result vanishes (an
    annihilated orbital is empty or a created orbital is already filled).
    """
    if n_spin_orbitals is not None:
        for q in (*creators, *annihilators):
            if not 0 <= q < n_spin_orbitals:
                raise ContractViolation(
                    f"spin-orbital index {q} outside [0, {n_spin_orbitals})"
                )
    sign = 1
    for q in reversed(annihilators):
        bit = 1 << q
        if q < 0:
            raise ContractViolation(f"negative spin-orbital index {q}")
        if not det & bit:
            return None
        if (det & (bit - 1)).bit_count() & 1:
            sign = -sign
        det ^= bit
    for q in reversed(creators):
        bit = 1 << q
        if q < 0:
            raise ContractViolation(f"negative spin-orbital index {q}")
        if det & bit:
            return None
        if (det & (bit - 1)).bit_count() & 1:
            sign = -sign
        det |= bit
    return det, sign


def excitation_degree(d1: Determinant, d2: Determinant) -> int:
    return (d1 ^ d2).bit_count() // 2


@dataclass(frozen=True, order=True)
class Excitation:
    """Excitation ``a+_a a+_b ... a_i a_j ...`` with both index lists descending."""

    occupied: Tuple[int, ...]
    virtual: Tuple[int, ...]

    def __post_init__(self):
        occ, vir = tuple(self.occupied), tuple(self.virtual)
        object.__setattr__(self, "occupied", occ)
        object.__setattr__(self, "virtual", vir)
        if len(occ) != len(vir) or not occ:
            raise ContractViolation(f"malformed excitation {occ} -> {vir}")
        if any(x <= y for x, y in zip(occ, occ[1:])) or any(
            x <= y for x, y in zip(vir, vir[1:])
        ):
            raise ContractViolation(f"indices must be strictly descending: {occ} -> {vir}")
        if set(occ) & set(vir):
            raise ContractViolation(f"occupied and virtual overlap: {occ} -> {vir}")

    @property
    def rank(self) -> int:
        return len(self.occupied)

    @property
    def occupied_mask(self) -> int:
        return from_occupied(self.occupied)

    @property
    def virtual_mask(self) -> int:
        return from_occupied(self.virtual)

    def conserves_spin(self, n_spatial: int) -> bool:
        n_occ_alpha = sum(1 for p in self.occupied if p < n_spatial)
        n_vir_alpha = sum(1 for p in self.virtual if p < n_spatial)
        return n_occ_alpha == n_vir_alpha

    def excite(self, det: Determinant) -> Optional[Tuple[Determinant, int]]:
        """Act with the excitation operator on ``det``."""
        return apply_second_quantized(det, self.virtual, self.occupied)

    def deexcite(self, det: Determinant) -> Optional[Tuple[Determinant, int]]:
        """Act with the adjoint (de-excitation) operator on ``det``."""
        return apply_second_quantized(det, self.occupied, self.virtual)

    def label(self, n_spatial: int) -> str:
        def name(p):
            return f"{p % n_spatial}{'b' if p >= n_spatial else 'a'}"

        occ = ",".join(name(p) for p in self.occupied)
        vir = ",".join(name(p) for p in self.virtual)
        return f"{occ}->{vir}"


def enumerate_excitations(
    reference: Determinant, n_spatial: int, max_rank: int = 2
) -> list[Excitation]:
    """All spin-conserving excitations of rank 1..max_rank out of ``reference``.

    Canonical order: rank ascending, then lexicographic on the (descending)
    occupied tuple followed by the virtual tuple.
    """
    if max_rank < 1:
        raise ContractViolation("max_rank must be at least 1")
    n_so = 2 * n_spatial
    occ = occupied(reference)
    vir = [p for p in range(n_so) if not reference >> p & 1]
    out = []
    for rank in range(1, max_rank + 1):
        block = []
        for o in combinations(sorted(occ, reverse=True), rank):
            for v in combinations(sorted(vir, reverse=True), rank):
                exc = Excitation(o, v)
                if exc.conserves_spin(n_spatial):
                    block.append(exc)
        block.sort(key=lambda e: (e.occupied, e.virtual))
        out.extend(block)
    return out
