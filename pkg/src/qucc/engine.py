"""Energy, gradient and Hessian of the factorized UCC energy on sector vectors.

With ``phi_k = U_k ... U_0 |ref>``, ``psi = phi_{N-1}``, ``W_k = U_{N-1} ... U_{k+1}``
and ``sigma_k = T_k - T_k^dagger`` (so ``dU_k/dtheta_k = sigma_k U_k``):

* ``d_k = d psi / d theta_k = W_k sigma_k phi_k``
* ``b_k = 2 <H psi | d_k> = 2 <lambda_k | sigma_k phi_k>``, ``lambda_k = W_k^T H psi``
* ``A_km = 2 <d_m | H | d_k> + 2 <H psi | d^2 psi / d theta_k d theta_m>`` where for
  ``k >= m`` the second piece is ``-<sigma_k lambda_k | U_k ... U_{m+1} sigma_m phi_m>``.

Factors whose angle is exactly zero are the identity, which is what makes the
small-angle block cheap: for positions past the last nonzero angle ``W_k = 1``.
"""

from __future__ import annotations

from typing import Dict, Optional, Sequence

import numpy as np

from .determinant import Determinant, Excitation
from .sector import CompiledFactor, SectorBasis, SectorHamiltonian
from .integrals import IntegralSet


class UccEngine:
    """Caches the sector basis, Hamiltonian and compiled factors for one system."""

    def __init__(self, ints: IntegralSet, reference: Determinant, threads: int = 1):
        self.ints = ints
        self.reference = reference
        self.hamiltonian = SectorHamiltonian(ints, threads=threads)
        self.basis: SectorBasis = self.hamiltonian.basis
        self.ref_vector = self.basis.to_dense({reference: 1.0})
        self._compiled: Dict[Excitation, CompiledFactor] = {}
        self.n_hamiltonian_calls = 0

    def compile(self, excitations: Sequence[Excitation]) -> list:
        out = []
        for exc in excitations:
            cf = self._compiled.get(exc)
            if cf is None:
                cf = self._compiled[exc] = CompiledFactor(exc, self.basis)
            out.append(cf)
        return out

    def apply_h(self, x: np.ndarray) -> np.ndarray:
        self.n_hamiltonian_calls += 1
        return self.hamiltonian(x)

    def state(self, excitations: Sequence[Excitation], angles: Sequence[float]) -> np.ndarray:
        v = self.ref_vector
        for cf, t in zip(self.compile(excitations), angles):
            v = cf.rotate(v, float(t))
        return v

    def energy(self, excitations, angles) -> float:
        psi = self.state(excitations, angles)
        return float(psi @ self.apply_h(psi))

    def energy_and_gradient(self, excitations: Sequence[Excitation], angles: Sequence[float],
                            active: Optional[Sequence[int]] = None):
        """Energy and ``dE/dtheta`` for positions in ``active`` (default: all)."""
        factors = self.compile(excitations)
        angles = np.asarray(angles, dtype=float)
        psi = self.state(excitations, angles)
        lam = self.apply_h(psi)
        energy = float(psi @ lam)
        n = len(factors)
        wanted = np.zeros(n, dtype=bool)
        wanted[list(range(n)) if active is None else list(active)] = True
        grad = np.zeros(n)
        phi = psi
        for k in range(n - 1, -1, -1):
            cf, t = factors[k], angles[k]
            if wanted[k]:
                grad[k] = 2.0 * (lam @ cf.generator(phi))
            if not wanted[:k].any():
                break
            phi = cf.rotate(phi, -t)
            lam = cf.rotate(lam, -t)
        if active is not None:
            grad = grad[list(active)]
        return energy, grad

    def derivatives(self, excitations: Sequence[Excitation], angles: Sequence[float]):
        """Return ``(energy, b, A, max_asymmetry)``; ``A`` is exactly symmetrized."""
        factors = self.compile(excitations)
        angles = np.asarray(angles, dtype=float)
        n = len(factors)
        dim = self.basis.dimension
        nonzero = np.flatnonzero(angles != 0.0)
        last = int(nonzero[-1]) if len(nonzero) else -1

        phis = np.empty((n, dim))
        v = self.ref_vector
        for k, (cf, t) in enumerate(zip(factors, angles)):
            v = cf.rotate(v, float(t))
            phis[k] = v
        psi = v if n else self.ref_vector
        hpsi = self.apply_h(psi)
        energy = float(psi @ hpsi)

        lams = np.empty((n, dim))
        lam = hpsi
        for k in range(n - 1, -1, -1):
            lams[k] = lam
            lam = factors[k].rotate(lam, -angles[k]) if k <= last else lam

        # d_k = W_k sigma_k phi_k; W_k is the identity for k >= last
        sig_phi = np.array([cf.generator(phis[k]) for k, cf in enumerate(factors)]).reshape(n, dim)
        dvecs = sig_phi.copy()
        for k in range(min(last, n)):
            x = sig_phi[k]
            for j in range(k + 1, last + 1):
                x = factors[j].rotate(x, angles[j])
            dvecs[k] = x
        b = 2.0 * (lams * sig_phi).sum(axis=1)

        mu = np.array([cf.generator(lams[k]) for k, cf in enumerate(factors)]).reshape(n, dim)
        second = np.zeros((n, n))
        for m in range(n):
            chi = sig_phi[m]
            second[m, m] = -(mu[m] @ chi)
            k = m + 1
            while k < n and k <= last:
                chi = factors[k].rotate(chi, angles[k])
                second[k, m] = -(mu[k] @ chi)
                k += 1
            if k < n:
                second[k:, m] = -(mu[k:] @ chi)
        second = np.tril(second) + np.tril(second, -1).T

        hd = np.empty((dim, n))
        if n:
            self.n_hamiltonian_calls += n
            hd = self.hamiltonian(np.ascontiguousarray(dvecs.T))
        first = dvecs @ hd  # first[m, k] = <d_m|H|d_k>
        asym = float(np.abs(first - first.T).max()) if n else 0.0
        a = 2.0 * first + 2.0 * second
        a = 0.5 * (a + a.T)
        return energy, b, a, asym
