"""Exact diagonalization in one (n_alpha, n_beta) sector."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from .determinant import ContractViolation, Determinant, hartree_fock
from .hamiltonian import SparseState
from .integrals import IntegralSet
from .sector import SectorBasis, SectorHamiltonian

log = logging.getLogger(__name__)

DENSE_LIMIT = 5000


class DavidsonError(RuntimeError):
    def __init__(self, message: str, residual_history: List[np.ndarray]):
        super().__init__(message)
        self.residual_history = residual_history


class ReferenceCharacterWarning(UserWarning):
    """No eigenstate keeps appreciable overlap with the reference determinant."""


@dataclass
class FciSolution:
    energies: np.ndarray
    vectors: np.ndarray  # (dimension, n_roots), columns orthonormal
    basis: SectorBasis
    hf_overlaps: np.ndarray
    method: str
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    @property
    def states(self) -> List[SparseState]:
        return [self.basis.to_sparse(self.vectors[:, k]) for k in range(self.vectors.shape[1])]


def davidson(apply_h, diagonal: np.ndarray, n_roots: int, tol: float = 1e-9,
             max_iter: int = 500, max_subspace: Optional[int] = None,
             guess: Optional[np.ndarray] = None, extra_guess: Optional[List[int]] = None,
             buffer: int = 2):
    """Block Davidson for the lowest ``n_roots`` eigenpairs of a symmetric operator.

    Diagonal preconditioner; ``n_roots + buffer`` Ritz pairs are iterated and
    all must converge, because Ritz values only bound eigenvalues from above
    and stopping on the lowest ``n_roots`` alone can silently skip a root.
    Collapse to the current Ritz vectors when the subspace exceeds
    ``max_subspace`` (default ``12 * n_roots``).
    The default start block holds the ``2 * n_roots + 4`` lowest-diagonal unit
    vectors plus any ``extra_guess`` positions; a start space of exactly
    ``n_roots`` vectors can miss roots that it has no overlap with.
    Converged when every residual 2-norm is ``<= tol``.
    """
    dim = diagonal.size
    want = n_roots
    n_roots = min(dim, n_roots + buffer)
    max_subspace = max_subspace or 12 * want
    max_subspace = max(max_subspace, 2 * n_roots + 4 + len(extra_guess or []))
    if guess is None:
        picks = list(np.argsort(diagonal, kind="stable")[: min(dim, 2 * n_roots + 4)])
        picks += [i for i in (extra_guess or []) if i not in picks]
        guess = np.zeros((dim, len(picks)))
        guess[picks, np.arange(len(picks))] = 1.0
    v, _ = np.linalg.qr(guess)
    hv = apply_h(v)
    history = []
    for it in range(max_iter):
        sub = v.T @ hv
        theta, s = np.linalg.eigh(0.5 * (sub + sub.T))
        n_keep = min(v.shape[1], n_roots)
        theta, s = theta[:n_keep], s[:, :n_keep]
        x = v @ s
        hx = hv @ s
        r = hx - x * theta
        norms = np.linalg.norm(r, axis=0)
        history.append(norms)
        if np.all(norms <= tol) and len(norms) == n_roots:
            return theta[:want], x[:, :want], norms[:want]
        if v.shape[1] + n_roots > max(max_subspace, 3 * n_roots):
            v, hv = x, hx
        new = []
        for k in np.flatnonzero(norms > tol):
            denom = theta[k] - diagonal
            denom[np.abs(denom) < 1e-8] = 1e-8
            new.append(r[:, k] / denom)
        t = np.array(new).T
        basis = [v]
        added = []
        for col in t.T:
            scale = np.linalg.norm(col)
            if not np.isfinite(scale) or scale == 0.0:
                continue
            col = col / scale
            for _ in range(2):
                for blk in basis:
                    col = col - blk @ (blk.T @ col)
            norm = np.linalg.norm(col)
            if norm > 1e-8:
                col = (col / norm)[:, None]
                basis.append(col)
                added.append(col)
        if not added:
            raise DavidsonError("subspace expansion stalled", history)
        t = np.hstack(added)
        v = np.hstack([v, t])
        hv = np.hstack([hv, apply_h(t)])
    raise DavidsonError(f"Davidson did not converge in {max_iter} iterations", history)


def fci_solve(ints: IntegralSet, n_alpha: Optional[int] = None, n_beta: Optional[int] = None,
              n_roots: int = 1, method: str = "auto", tol: float = 1e-9,
              reference: Optional[Determinant] = None, threads: int = 1) -> FciSolution:
    """Lowest ``n_roots`` eigenpairs; dense below ``DENSE_LIMIT`` unless ``method``
    is forced to ``"dense"`` or ``"davidson"``."""
    n_alpha = ints.n_alpha if n_alpha is None else n_alpha
    n_beta = ints.n_beta if n_beta is None else n_beta
    basis = SectorBasis(ints.n_spatial, n_alpha, n_beta)
    if n_roots < 1 or n_roots > basis.dimension:
        raise ContractViolation(f"n_roots={n_roots} outside 1..{basis.dimension}")
    ham = SectorHamiltonian(ints, basis, threads=threads)
    if method == "auto":
        method = "dense" if basis.dimension <= DENSE_LIMIT else "davidson"
    if method == "dense":
        mat = ham.dense_matrix()
        energies, vectors = scipy.linalg.eigh(0.5 * (mat + mat.T), driver="evr",
                                              subset_by_index=[0, n_roots - 1])
    elif method == "davidson":
        ref_idx = basis.index([reference if reference is not None
                               else hartree_fock(ints.n_spatial, n_alpha, n_beta)])
        energies, vectors, _ = davidson(ham, ham.diagonal, n_roots, tol=tol,
                                        extra_guess=[int(ref_idx[0])])
    else:
        raise ContractViolation(f"unknown method {method!r}")
    residuals = np.linalg.norm(ham(vectors) - vectors * energies, axis=0)
    if reference is None:
        reference = hartree_fock(ints.n_spatial, n_alpha, n_beta)
    ref_idx = basis.index([reference])[0]
    overlaps = np.abs(vectors[ref_idx, :])
    return FciSolution(np.asarray(energies), vectors, basis, overlaps, method, residuals)


def track_hf_state(sol: FciSolution, tie_tol: float = 1e-9, warn_below: float = 0.1) -> int:
    """Index of the root with the largest ``|<HF|psi_k>|``; near-ties go to the
    lower root."""
    ov = np.asarray(sol.hf_overlaps)
    best = float(ov.max())
    if best < warn_below:
        warnings.warn(
            f"largest reference overlap is {best:.3f}; reference character lost",
            ReferenceCharacterWarning, stacklevel=2,
        )
    return int(np.flatnonzero(ov >= best - tie_tol)[0])
