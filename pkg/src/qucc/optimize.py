"""BFGS with a strong Wolfe line search.

Line search follows Nocedal & Wright (Algorithms 3.5 and 3.6) with cubic
interpolation in the zoom phase. Near convergence, energy differences sink
into round-off; the sufficient-decrease test then falls back to the
approximate Wolfe condition of Hager & Zhang, which only uses slopes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

log = logging.getLogger(__name__)

FunAndGrad = Callable[[np.ndarray], Tuple[float, np.ndarray]]


class OptimizationError(RuntimeError):
    """Optimizer stopped short; carries the best point found."""

    def __init__(self, message: str, x: np.ndarray, fun: float, gnorm: float, nit: int):
        super().__init__(f"{message} (|g|_inf={gnorm:.3e} after {nit} iterations)")
        self.x = x
        self.fun = fun
        self.gnorm = gnorm
        self.nit = nit


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    nit: int
    nfev: int
    history: list = field(default_factory=list)

    @property
    def gnorm(self) -> float:
        return float(np.abs(self.grad).max()) if self.grad.size else 0.0


class LineSearchFailure(Exception):
    pass


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic interpolating (a, fa, da), (b, fb, db), or None."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0:
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    denom = db - da + 2.0 * d2
    if denom == 0:
        return None
    return b - (b - a) * (db + d2 - d1) / denom


def wolfe_line_search(phi, f0: float, d0: float, alpha1: float = 1.0, c1: float = 1e-4,
                      c2: float = 0.9, alpha_max: float = 50.0, max_iter: int = 40,
                      eps_f: float = 1e-14):
    """Find ``alpha`` satisfying the strong Wolfe conditions.

    ``phi(alpha)`` returns ``(f, slope, payload)``; the accepted triple is
    returned. ``d0`` must be negative.
    """
    if d0 >= 0:
        raise LineSearchFailure("not a descent direction")
    flat = eps_f * max(1.0, abs(f0))

    def is_flat(fa):
        return abs(fa - f0) <= flat

    def sufficient(a, fa, da):
        if fa <= f0 + c1 * a * d0:
            return True
        # approximate Wolfe: f is flat to round-off, trust the slope
        return is_flat(fa) and da <= (2 * c1 - 1) * d0

    def curvature(da):
        return abs(da) <= -c2 * d0

    def zoom(lo, hi):
        a_lo, f_lo, d_lo, p_lo = lo
        a_hi, f_hi, d_hi, _ = hi
        for _ in range(max_iter):
            span = abs(a_hi - a_lo)
            noisy = is_flat(f_lo) and is_flat(f_hi)
            if noisy and d_lo < 0 < d_hi:
                # secant on the slope; function values carry no information
                a = a_lo - d_lo * (a_hi - a_lo) / (d_hi - d_lo)
            else:
                a = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            if a is None or not (min(a_lo, a_hi) + 0.1 * span <= a <= max(a_lo, a_hi) - 0.1 * span):
                a = 0.5 * (a_lo + a_hi)
            fa, da, pa = phi(a)
            if is_flat(fa) and noisy:
                if curvature(da) and sufficient(a, fa, da):
                    return a, fa, da, pa
                if da < 0:
                    a_lo, f_lo, d_lo, p_lo = a, fa, da, pa
                else:
                    a_hi, f_hi, d_hi = a, fa, da
            elif not sufficient(a, fa, da) or (fa >= f_lo and not is_flat(fa)):
                a_hi, f_hi, d_hi = a, fa, da
            else:
                if curvature(da):
                    return a, fa, da, pa
                if da * (a_hi - a_lo) >= 0:
                    a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
                a_lo, f_lo, d_lo, p_lo = a, fa, da, pa
            if abs(a_hi - a_lo) < 1e-16 * max(1.0, abs(a_lo)):
                break
        if a_lo > 0 and (f_lo <= f0 or is_flat(f_lo)) and d_lo < 0:
            return a_lo, f_lo, d_lo, p_lo
        raise LineSearchFailure("zoom did not converge")

    prev = (0.0, f0, d0, None)
    a = alpha1
    for i in range(max_iter):
        fa, da, pa = phi(a)
        if not sufficient(a, fa, da) or (i > 0 and fa >= prev[1] and not is_flat(fa)):
            return zoom(prev, (a, fa, da, pa))
        if curvature(da):
            return a, fa, da, pa
        if da >= 0:
            if is_flat(fa) and is_flat(prev[1]):
                # bracket by slope sign: prev descends, a ascends
                return zoom(prev, (a, fa, da, pa))
            return zoom((a, fa, da, pa), prev)
        prev = (a, fa, da, pa)
        a = min(2.0 * a, alpha_max)
    raise LineSearchFailure("bracketing phase exhausted")


def bfgs(fun_and_grad: FunAndGrad, x0, gtol: float = 1e-8, max_iter: int = 500,
         max_step: float = 1.0) -> OptimizeResult:
    """Minimize with BFGS from an identity inverse Hessian.

    Converged when ``max|g| <= gtol``. ``max_step`` caps the infinity norm of
    the first trial step of every line search (angles are periodic, so large
    jumps are never useful).
    """
    x = np.array(x0, dtype=float)
    n = x.size
    f, g = fun_and_grad(x)
    nfev = 1
    hinv = np.eye(n)
    history = [f]
    resets = 0
    for it in range(max_iter + 1):
        gnorm = float(np.abs(g).max()) if n else 0.0
        if gnorm <= gtol:
            return OptimizeResult(x, f, g, it, nfev, history)
        if it == max_iter:
            break
        p = -hinv @ g
        d0 = float(p @ g)
        if d0 >= 0:
            hinv = np.eye(n)
            p = -g
            d0 = float(p @ g)
        alpha1 = min(1.0, max_step / max(np.abs(p).max(), 1e-300))

        def phi(a):
            nonlocal nfev
            xa = x + a * p
            fa, ga = fun_and_grad(xa)
            nfev += 1
            return fa, float(ga @ p), (xa, ga)

        try:
            alpha, f_new, _, (x_new, g_new) = wolfe_line_search(phi, f, d0, alpha1)
        except LineSearchFailure as exc:
            if resets < 2 and not np.allclose(hinv, np.eye(n)):
                log.debug("line search failed (%s); resetting inverse Hessian", exc)
                hinv = np.eye(n)
                resets += 1
                continue
            raise OptimizationError(f"line search failed: {exc}", x, f, gnorm, it) from None
        s = x_new - x
        y = g_new - g
        x, f, g = x_new, f_new, g_new
        history.append(f)
        sy = float(s @ y)
        if sy > 1e-16 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            rho = 1.0 / sy
            hy = hinv @ y
            hinv += (rho * rho * float(y @ hy) + rho) * np.outer(s, s) - rho * (
                np.outer(hy, s) + np.outer(s, hy)
            )
    raise OptimizationError("maximum iterations reached", x, f, float(np.abs(g).max()), max_iter)
