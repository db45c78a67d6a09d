"""The qUCC pipeline.

1. rank factors by MP2 and keep the first ``L`` as large angles;
2. optimize the large angles with BFGS on the exact UCC energy;
3. expand the energy to second order about that state (small angles at zero),
   solve ``A @ delta = -b`` for every angle and evaluate the quadratic model;
4. promote small factors whose solved angle exceeds the threshold and repeat.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .ansatz import FactorList, UccFactor, check_unique
from .determinant import ContractViolation, Determinant, Excitation
from .engine import UccEngine
from .integrals import IntegralSet, hf_energy
from .mp2 import RankedEntry, partition
from .optimize import OptimizationError, bfgs

log = logging.getLogger(__name__)

SEED_ORDERS = ("largest-first", "largest-last")


class UnsolvableSystemError(ArithmeticError):
    pass


class PipelineError(RuntimeError):
    """A stage of the pipeline failed in promotion round ``round_index``."""

    def __init__(self, message: str, round_index: int):
        super().__init__(f"round {round_index}: {message}")
        self.round_index = round_index


@dataclass
class QuccConfig:
    n_large: int
    gradient_tolerance: float = 1e-8
    max_optimizer_iterations: int = 500
    fd_validation: bool = False
    promotion_threshold: float = 1e-4
    svd_condition_cutoff: float = 1e12
    max_promotion_rounds: int = 5
    promote_singles: bool = True
    promote_doubles: bool = False
    seed_order: str = "largest-first"
    threads: int = 1

    def __post_init__(self):
        if self.n_large < 0:
            raise ContractViolation("n_large must be non-negative")
        for name in ("gradient_tolerance", "promotion_threshold", "svd_condition_cutoff"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be positive")
        if self.max_optimizer_iterations < 1 or self.max_promotion_rounds < 0:
            raise ContractViolation("iteration limits must be positive")
        if self.seed_order not in SEED_ORDERS:
            raise ContractViolation(f"seed_order must be one of {SEED_ORDERS}")


@dataclass
class QuccResult:
    e_reference: float
    e_ucc_large: float
    e_qucc: float
    large_angles: List[Tuple[int, float]]
    small_angles: List[Tuple[int, float]]
    large_angles_optimized: List[Tuple[int, float]]
    b_norm: float
    large_gradient_max: float
    a_condition: float
    hessian_asymmetry: float
    solve_path: str
    promoted_singles: List[Excitation]
    promoted_doubles: List[Excitation]
    promotion_rounds: int
    optimizer_iterations: int
    fd_max_error: Optional[float] = None

    @property
    def n_large(self) -> int:
        return len(self.large_angles)

    def to_dict(self, n_spatial: Optional[int] = None) -> dict:
        d = asdict(self)
        for key in ("promoted_singles", "promoted_doubles"):
            exc = getattr(self, key)
            d[key] = [e.label(n_spatial) if n_spatial else [list(e.occupied), list(e.virtual)]
                      for e in exc]
        d["n_large"] = self.n_large
        return d


class AngleUpdate(NamedTuple):
    delta: np.ndarray
    path: str  # "direct" or "svd"
    condition: float


def _engine(ints, reference, engine, threads=1) -> UccEngine:
    if engine is None:
        return UccEngine(ints, reference, threads=threads)
    if engine.ints is not ints or engine.reference != reference:
        raise ContractViolation("engine was built for a different system")
    return engine


def _split(factors: FactorList):
    return [f.excitation for f in factors], np.array([f.angle for f in factors], dtype=float)


def optimize_large_angles(ints: IntegralSet, reference: Determinant, large: FactorList,
                          cfg: QuccConfig, engine: Optional[UccEngine] = None,
                          info: Optional[dict] = None) -> List[UccFactor]:
    """Minimize the UCC energy over the angles of ``large`` (seeded from their
    current values). Raises :class:`OptimizationError` on non-convergence."""
    large = list(large)
    if not large:
        return []
    check_unique(large)
    engine = _engine(ints, reference, engine, cfg.threads)
    excs, x0 = _split(large)

    def fg(x):
        return engine.energy_and_gradient(excs, x)

    e_seed = engine.energy(excs, x0)
    e_ref = engine.energy([], [])
    if e_seed > e_ref:
        log.info("seed energy above reference (%.3e); starting from zero angles", e_seed - e_ref)
        x0 = np.zeros_like(x0)
    res = bfgs(fg, x0, gtol=cfg.gradient_tolerance, max_iter=cfg.max_optimizer_iterations)
    if info is not None:
        info["nit"] = info.get("nit", 0) + res.nit
        info["energy"] = res.fun
        info["gnorm"] = res.gnorm
    return [f.with_angle(t) for f, t in zip(large, res.x)]


def gradient(ints: IntegralSet, reference: Determinant, factors: FactorList,
             active: Optional[Sequence[int]] = None,
             engine: Optional[UccEngine] = None) -> np.ndarray:
    """``dE/dtheta_k`` at the factors' current angles for positions in ``active``."""
    excs, angles = _split(factors)
    return _engine(ints, reference, engine).energy_and_gradient(excs, angles, active)[1]


def hessian(ints: IntegralSet, reference: Determinant, factors: FactorList,
            engine: Optional[UccEngine] = None, return_asymmetry: bool = False):
    """Symmetrized ``d^2E/dtheta_k dtheta_m``; optionally also the largest
    asymmetry seen before symmetrization."""
    excs, angles = _split(factors)
    _, _, a, asym = _engine(ints, reference, engine).derivatives(excs, angles)
    return (a, asym) if return_asymmetry else a


def condition_number(a: np.ndarray) -> float:
    if a.size == 0:
        return 1.0
    w = np.abs(np.linalg.eigvalsh(a))
    return float("inf") if w.min() == 0.0 else float(w.max() / w.min())


def solve_angle_update(a: np.ndarray, b: np.ndarray, cfg: Optional[QuccConfig] = None,
                       svd_condition_cutoff: float = 1e12) -> AngleUpdate:
    """Solve ``A @ delta = -b``; ill-conditioned systems go through a truncated
    pseudoinverse (singular values below ``1e-12 * s_max`` discarded)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (b.size, b.size):
        raise ContractViolation(f"A has shape {a.shape}, b has length {b.size}")
    if b.size == 0:
        return AngleUpdate(np.zeros(0), "direct", 1.0)
    cutoff = cfg.svd_condition_cutoff if cfg is not None else svd_condition_cutoff
    if not np.any(a):
        if np.any(b):
            raise UnsolvableSystemError("A is identically zero but b is not")
        return AngleUpdate(np.zeros_like(b), "svd", float("inf"))
    cond = condition_number(a)
    if cond <= cutoff:
        delta = scipy.linalg.solve(a, -b, assume_a="sym")
        return AngleUpdate(delta, "direct", cond)
    delta = np.linalg.pinv(a, rcond=1e-12, hermitian=True) @ (-b)
    return AngleUpdate(delta, "svd", cond)


def quadratic_energy(e0: float, b: np.ndarray, a: np.ndarray, delta: np.ndarray) -> float:
    """Second-order model ``e0 + b.delta + delta.A.delta / 2``."""
    return float(e0 + b @ delta + 0.5 * delta @ a @ delta)


def finite_difference_gradient(engine: UccEngine, excs, angles, h: float = 1e-5) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    out = np.empty(len(angles))
    for k in range(len(angles)):
        step = np.zeros_like(angles)
        step[k] = h
        out[k] = (engine.energy(excs, angles + step) - engine.energy(excs, angles - step)) / (2 * h)
    return out


def promote_and_iterate(ints: IntegralSet, reference: Determinant,
                        ranked: Sequence[RankedEntry], cfg: QuccConfig,
                        engine: Optional[UccEngine] = None) -> QuccResult:
    """Run the full qUCC pipeline with ``cfg.n_large`` initial large factors."""
    engine = _engine(ints, reference, engine, cfg.threads)
    index_of = {e.excitation: e.canonical_index for e in ranked}
    large, small = partition(ranked, cfg.n_large)
    if cfg.seed_order == "largest-last":
        large = large[::-1]
    promoted_singles: List[Excitation] = []
    promoted_doubles: List[Excitation] = []
    info: dict = {}
    rounds = 0
    while True:
        try:
            large = optimize_large_angles(ints, reference, large, cfg, engine, info)
        except OptimizationError as exc:
            raise PipelineError(str(exc), rounds) from exc
        factors = large + small
        excs, angles = _split(factors)
        e0, b, a, asym = engine.derivatives(excs, angles)
        try:
            update = solve_angle_update(a, b, cfg)
        except UnsolvableSystemError as exc:
            raise PipelineError(str(exc), rounds) from exc
        e_qucc = quadratic_energy(e0, b, a, update.delta)
        n_l = len(large)
        small_delta = update.delta[n_l:]
        chosen = [
            j for j, f in enumerate(small)
            if abs(small_delta[j]) > cfg.promotion_threshold
            and ((f.excitation.rank == 1 and cfg.promote_singles)
                 or (f.excitation.rank > 1 and cfg.promote_doubles))
        ]
        log.info("round %d: L=%d E_ucc=%.12f E_qucc=%.12f promote=%d",
                 rounds, n_l, e0, e_qucc, len(chosen))
        if not chosen or rounds >= cfg.max_promotion_rounds:
            break
        keep = set(chosen)
        for j in chosen:
            f = small[j]
            (promoted_singles if f.excitation.rank == 1 else promoted_doubles).append(f.excitation)
            large.append(f.with_angle(small_delta[j]))
        small = [f for j, f in enumerate(small) if j not in keep]
        rounds += 1

    fd_err = None
    if cfg.fd_validation:
        fd = finite_difference_gradient(engine, excs, angles)
        fd_err = float(np.abs(fd - b).max())
    final = angles + update.delta
    n_l = len(large)
    return QuccResult(
        e_reference=hf_energy(ints, reference),
        e_ucc_large=e0,
        e_qucc=e_qucc,
        large_angles=[(index_of[x], float(t)) for x, t in zip(excs[:n_l], final[:n_l])],
        small_angles=[(index_of[x], float(t)) for x, t in zip(excs[n_l:], final[n_l:])],
        large_angles_optimized=[(index_of[f.excitation], f.angle) for f in large],
        b_norm=float(np.linalg.norm(b)),
        large_gradient_max=float(np.abs(b[:n_l]).max()) if n_l else 0.0,
        a_condition=update.condition,
        hessian_asymmetry=asym,
        solve_path=update.path,
        promoted_singles=promoted_singles,
        promoted_doubles=promoted_doubles,
        promotion_rounds=rounds,
        optimizer_iterations=info.get("nit", 0),
        fd_max_error=fd_err,
    )


def ucc_energy(ints: IntegralSet, reference: Determinant, ranked: Sequence[RankedEntry],
               cfg: QuccConfig, engine: Optional[UccEngine] = None):
    """Plain factorized UCC over the first ``cfg.n_large`` ranked factors.

    Returns ``(energy, optimized factors)``.
    """
    engine = _engine(ints, reference, engine, cfg.threads)
    large, _ = partition(ranked, cfg.n_large)
    if cfg.seed_order == "largest-last":
        large = large[::-1]
    large = optimize_large_angles(ints, reference, large, cfg, engine)
    excs, angles = _split(large)
    return engine.energy(excs, angles), large
