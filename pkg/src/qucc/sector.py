"""Dense-vector machinery over a fixed (n_alpha, n_beta) determinant sector.

Every state the solver touches lives in one particle-number/spin sector, so
the working representation is a dense vector indexed by
``alpha_string_index * n_beta_strings + beta_string_index``. The Hamiltonian
is applied with the spin-free form

    H = sum_pq k_pq E_pq + 1/2 sum_pqrs (pq|rs) E_pq E_rs + E_core,
    k_pq = h_pq - 1/2 sum_r (pr|rq),

using one-body link tables on the alpha and beta strings only. The many-body
matrix is never built (``dense_matrix`` exists for the exact oracle).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from itertools import combinations
from typing import Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .determinant import ContractViolation, Determinant, Excitation
from .integrals import IntegralSet


def strings(n_orb: int, n_el: int) -> np.ndarray:
    """All ``n_el``-electron occupation strings over ``n_orb`` orbitals, ascending."""
    vals = sorted(sum(1 << p for p in c) for c in combinations(range(n_orb), n_el))
    return np.array(vals, dtype=np.uint64)


def _parity_below(bits: np.ndarray, q: int) -> np.ndarray:
    mask = np.uint64((1 << q) - 1)
    return np.bitwise_count(bits & mask) & 1


class SectorBasis:
    """Ordered determinant basis for ``C(M, n_alpha) * C(M, n_beta)`` states."""

    def __init__(self, n_spatial: int, n_alpha: int, n_beta: int):
        if 2 * n_spatial > 64:
            raise ContractViolation("sector vectors support at most 64 spin orbitals")
        self.n_spatial = n_spatial
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        self.alpha = strings(n_spatial, n_alpha)
        self.beta = strings(n_spatial, n_beta)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.alpha), len(self.beta)

    @property
    def dimension(self) -> int:
        return len(self.alpha) * len(self.beta)

    @cached_property
    def dets(self) -> np.ndarray:
        m = np.uint64(self.n_spatial)
        return (self.alpha[:, None] | (self.beta[None, :] << m)).reshape(-1)

    def index(self, dets) -> np.ndarray:
        """Basis positions of determinants (array-like of bitmasks)."""
        dets = np.asarray(dets, dtype=np.uint64)
        mask = np.uint64((1 << self.n_spatial) - 1)
        a = dets & mask
        b = dets >> np.uint64(self.n_spatial)
        ia = np.searchsorted(self.alpha, a)
        ib = np.searchsorted(self.beta, b)
        ok = (ia < len(self.alpha)) & (ib < len(self.beta))
        ok &= self.alpha[np.minimum(ia, len(self.alpha) - 1)] == a
        ok &= self.beta[np.minimum(ib, len(self.beta) - 1)] == b
        if not np.all(ok):
            raise ContractViolation("determinant outside the sector")
        return ia * len(self.beta) + ib

    def to_dense(self, state: Mapping[Determinant, float]) -> np.ndarray:
        v = np.zeros(self.dimension)
        if state:
            dets = list(state)
            v[self.index(dets)] = [state[d] for d in dets]
        return v

    def to_sparse(self, vec: np.ndarray, tol: float = 0.0) -> dict:
        nz = np.flatnonzero(np.abs(vec) > tol)
        return {int(d): float(c) for d, c in zip(self.dets[nz], vec[nz])}


def _link_matrices(strs: np.ndarray, n_orb: int):
    """Sparse ``E`` with ``(E @ x)[(p*M+q)*n + I] = sum_J <I|E_pq|J> x[J]``
    and its transpose-reindexed twin ``F[I, (p*M+q)*n + J]``."""
    n = len(strs)
    lookup = {int(s): k for k, s in enumerate(strs)}
    rows, frows, cols, vals = [], [], [], []
    for j, s in enumerate(int(x) for x in strs):
        occ = [q for q in range(n_orb) if s >> q & 1]
        for q in occ:
            s1 = s ^ (1 << q)
            sign_q = -1 if (s1 & ((1 << q) - 1)).bit_count() & 1 else 1
            for p in range(n_orb):
                if s1 >> p & 1:
                    continue
                sign = sign_q * (-1 if (s1 & ((1 << p) - 1)).bit_count() & 1 else 1)
                i = lookup[s1 | (1 << p)]
                pq = p * n_orb + q
                rows.append(pq * n + i)
                frows.append(i)
                cols.append(pq * n + j)
                vals.append(float(sign))
    m2 = n_orb * n_orb
    e = sp.csr_matrix((vals, (rows, [c % n for c in cols])), shape=(m2 * n, n))
    f = sp.csr_matrix((vals, (frows, cols)), shape=(n, m2 * n))
    return e, f


class SectorHamiltonian:
    """Vectorized, matrix-free ``H`` acting on dense sector vectors."""

    def __init__(self, ints: IntegralSet, basis: Optional[SectorBasis] = None, threads: int = 1):
        self.ints = ints
        self.basis = basis or SectorBasis(ints.n_spatial, ints.n_alpha, ints.n_beta)
        m = ints.n_spatial
        self.threads = max(1, int(threads))
        eri = ints.two_body
        self._eri = np.ascontiguousarray(eri.reshape(m * m, m * m))
        k = ints.one_body - 0.5 * np.einsum("prrq->pq", eri)
        self._k = k.reshape(m * m)
        self._ea, self._fa = _link_matrices(self.basis.alpha, m)
        self._eb, self._fb = _link_matrices(self.basis.beta, m)

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def _apply_block(self, x: np.ndarray) -> np.ndarray:
        na, nb = self.basis.shape
        k = x.shape[1]
        m2 = self.ints.n_spatial ** 2
        psi = x.reshape(na, nb, k)
        t = (self._ea @ psi.reshape(na, nb * k)).reshape(m2, na, nb, k)
        tb = (self._eb @ psi.transpose(1, 0, 2).reshape(nb, na * k)).reshape(m2, nb, na, k)
        t += tb.transpose(0, 2, 1, 3)
        g = (self._eri @ t.reshape(m2, -1)).reshape(m2, na, nb, k)
        g *= 0.5
        g += self._k[:, None, None, None] * psi[None]
        out = (self._fa @ g.reshape(m2 * na, nb * k)).reshape(na, nb, k)
        gb = g.transpose(0, 2, 1, 3).reshape(m2 * nb, na * k)
        out += (self._fb @ gb).reshape(nb, na, k).transpose(1, 0, 2)
        out += self.ints.core_energy * psi
        return out.reshape(na * nb, k)

    def __call__(self, x: np.ndarray, block: int = 64) -> np.ndarray:
        """``H @ x`` for a vector ``(D,)`` or a block of columns ``(D, k)``."""
        vec = x.ndim == 1
        x2 = x[:, None] if vec else x
        if x2.shape[0] != self.dimension:
            raise ContractViolation(f"vector length {x2.shape[0]} != sector dimension {self.dimension}")
        x2 = np.asarray(x2, dtype=float)
        # bound the (M^2, D, k) intermediates to roughly 64 MB
        cap = max(1, int(8e6 // max(1, self.ints.n_spatial ** 2 * self.dimension)))
        block = max(1, min(block, cap))
        chunks = [slice(s, min(s + block, x2.shape[1])) for s in range(0, x2.shape[1], block)]
        out = np.empty_like(x2)
        if self.threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                for sl, res in zip(chunks, pool.map(lambda s: self._apply_block(x2[:, s]), chunks)):
                    out[:, sl] = res
        else:
            for sl in chunks:
                out[:, sl] = self._apply_block(x2[:, sl])
        return out[:, 0] if vec else out

    @cached_property
    def diagonal(self) -> np.ndarray:
        ints = self.ints
        m = ints.n_spatial
        eri = ints.two_body
        occ_a = ((self.basis.alpha[:, None] >> np.arange(m, dtype=np.uint64)) & np.uint64(1)).astype(float)
        occ_b = ((self.basis.beta[:, None] >> np.arange(m, dtype=np.uint64)) & np.uint64(1)).astype(float)
        jmat = np.einsum("ppqq->pq", eri)
        kmat = np.einsum("pqqp->pq", eri)
        h = np.diag(ints.one_body)
        ea = occ_a @ h + 0.5 * np.einsum("ip,pq,iq->i", occ_a, jmat - kmat, occ_a)
        eb = occ_b @ h + 0.5 * np.einsum("ip,pq,iq->i", occ_b, jmat - kmat, occ_b)
        eab = occ_a @ jmat @ occ_b.T
        return (ea[:, None] + eb[None, :] + eab).reshape(-1) + ints.core_energy

    def _same_spin_block(self, links: np.ndarray) -> np.ndarray:
        """Dense one-string Hamiltonian ``sum k_pq E_pq + 1/2 sum (pq|rs) E_pq E_rs``."""
        m2 = self.ints.n_spatial ** 2
        c = np.tensordot(self._eri, links, axes=(1, 0))  # c[pq] = sum_rs (pq|rs) E_rs
        out = np.tensordot(self._k, links, axes=(0, 0))
        out += 0.5 * sum(links[pq] @ c[pq] for pq in range(m2))
        return out

    def dense_matrix(self) -> np.ndarray:
        """Full sector matrix for the exact oracle.

        Assembled as ``H_a (x) 1 + 1 (x) H_b + sum_pq E^a_pq (x) C_pq`` with
        ``C_pq = sum_rs (pq|rs) E^b_rs``, i.e. from one-string link tables only.
        """
        na, nb = self.basis.shape
        m2 = self.ints.n_spatial ** 2
        la = self._ea.toarray().reshape(m2, na, na)
        lb = self._eb.toarray().reshape(m2, nb, nb)
        h = np.zeros((na, nb, na, nb))
        ha = self._same_spin_block(la)
        hb = self._same_spin_block(lb)
        h += ha[:, None, :, None] * np.eye(nb)[None, :, None, :]
        h += np.eye(na)[:, None, :, None] * hb[None, :, None, :]
        cb = np.tensordot(self._eri, lb, axes=(1, 0))
        for pq in range(m2):
            rows, cols = np.nonzero(la[pq])
            if len(rows):
                h[rows, :, cols, :] += la[pq][rows, cols][:, None, None] * cb[pq][None]
        h = h.reshape(na * nb, na * nb)
        h[np.diag_indices_from(h)] += self.ints.core_energy
        return h


class CompiledFactor:
    """Index pairs and phases of one excitation over a sector basis.

    ``src[n]`` supports the excitation, ``dst[n]`` is its image and
    ``excitation|src> = phase * |dst>``; the de-excitation maps ``dst`` back
    with the same phase. Determinants outside ``src``/``dst`` are untouched.
    """

    __slots__ = ("excitation", "src", "dst", "phase")

    def __init__(self, excitation: Excitation, basis: SectorBasis):
        self.excitation = excitation
        dets = basis.dets
        occ = np.uint64(excitation.occupied_mask)
        vir = np.uint64(excitation.virtual_mask)
        ok = ((dets & occ) == occ) & ((dets & vir) == 0)
        src = np.flatnonzero(ok)
        bits = dets[src]
        parity = np.zeros(len(src), dtype=np.int64)
        for q in reversed(excitation.occupied):
            parity ^= _parity_below(bits, q).astype(np.int64)
            bits = bits ^ np.uint64(1 << q)
        for q in reversed(excitation.virtual):
            parity ^= _parity_below(bits, q).astype(np.int64)
            bits = bits | np.uint64(1 << q)
        self.src = src
        self.dst = basis.index(bits)
        self.phase = 1.0 - 2.0 * parity

    def _ph(self, x):
        return self.phase if x.ndim == 1 else self.phase[:, None]

    def rotate(self, x: np.ndarray, theta: float) -> np.ndarray:
        """``exp(theta * (T - T^dagger)) x`` as a new array."""
        if theta == 0.0:
            return x.copy()
        c, s = np.cos(theta), np.sin(theta)
        ph = self._ph(x)
        xs, xd = x[self.src], x[self.dst]
        out = x.copy()
        out[self.src] = c * xs - s * ph * xd
        out[self.dst] = c * xd + s * ph * xs
        return out

    def generator(self, x: np.ndarray) -> np.ndarray:
        """``(T - T^dagger) x``."""
        ph = self._ph(x)
        out = np.zeros_like(x)
        out[self.dst] = ph * x[self.src]
        out[self.src] = -ph * x[self.dst]
        return out

    def derivative(self, x: np.ndarray, theta: float, order: int = 1) -> np.ndarray:
        """``d^n/dtheta^n exp(theta * (T - T^dagger)) x`` for ``order`` in 1, 2."""
        c, s = np.cos(theta), np.sin(theta)
        ph = self._ph(x)
        xs, xd = x[self.src], x[self.dst]
        out = np.zeros_like(x)
        if order == 1:
            out[self.src] = -s * xs - c * ph * xd
            out[self.dst] = -s * xd + c * ph * xs
        elif order == 2:
            out[self.src] = -c * xs + s * ph * xd
            out[self.dst] = -c * xd - s * ph * xs
        else:
            raise ContractViolation("only first and second derivatives are provided")
        return out
