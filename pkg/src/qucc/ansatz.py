"""Factorized UCC on sparse states.

Each factor is ``U = exp(theta * (T - T^dagger))`` for one excitation ``T``.
Because ``(T - T^dagger)^2`` is minus a projector on the determinants the
excitation can touch, the exponential closes to

    U = 1 + sin(theta) (T - T^dagger) + (cos(theta) - 1) P,

and the derivatives follow from shifting ``theta`` by ``pi/2``. Factor
positions are 0-based here; position 0 acts first on the reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, Mapping, Sequence

from .determinant import ContractViolation, Determinant, Excitation
from .hamiltonian import SparseState


@dataclass(frozen=True)
class UccFactor:
    excitation: Excitation
    angle: float = 0.0

    def __post_init__(self):
        if self.excitation.rank not in (1, 2):
            raise ContractViolation("only singles and doubles factors are supported")
        if not math.isfinite(self.angle):
            raise ContractViolation(f"non-finite angle {self.angle}")

    def with_angle(self, angle: float) -> "UccFactor":
        return replace(self, angle=float(angle))


FactorList = Sequence[UccFactor]


def check_unique(factors: FactorList) -> None:
    seen = set()
    for f in factors:
        if f.excitation in seen:
            raise ContractViolation(f"duplicate factor {f.excitation}")
        seen.add(f.excitation)


def _accumulate(out: Dict[Determinant, float], det: Determinant, value: float) -> None:
    out[det] = out.get(det, 0.0) + value


def _apply(state: Mapping[Determinant, float], f: UccFactor, order: int) -> SparseState:
    # order n > 0: n-th angle derivative; the identity part drops out and the
    # cos/sin pair is shifted by n quarter turns
    c, s = math.cos(f.angle), math.sin(f.angle)
    for _ in range(order):
        c, s = -s, c
    exc = f.excitation
    out: SparseState = {}
    for det in sorted(state):
        coef = state[det]
        hit = exc.excite(det)
        sign = 1.0
        if hit is None:
            hit = exc.deexcite(det)
            sign = -1.0
            if hit is None:
                if order == 0:
                    _accumulate(out, det, coef)
                continue
        image, phase = hit
        if c != 0.0:
            _accumulate(out, det, c * coef)
        if s != 0.0:
            _accumulate(out, image, sign * s * phase * coef)
    return {d: v for d, v in sorted(out.items()) if v != 0.0}


def apply_factor(state: Mapping[Determinant, float], f: UccFactor) -> SparseState:
    return _apply(state, f, 0)


def apply_factor_derivative(state: Mapping[Determinant, float], f: UccFactor,
                            order: int = 1) -> SparseState:
    """``d^order U / d theta^order`` applied to ``state``.

    Determinants that support neither the excitation nor the de-excitation
    are dropped, since only the projector part of ``U`` depends on the angle.
    """
    if order < 1:
        raise ContractViolation("derivative order must be positive")
    return _apply(state, f, order)


def _build(reference: Determinant, factors: FactorList, orders: Mapping[int, int]) -> SparseState:
    state: SparseState = {reference: 1.0}
    for pos, f in enumerate(factors):
        n = orders.get(pos, 0)
        state = _apply(state, f, n)
    return state


def build_state(reference: Determinant, factors: FactorList) -> SparseState:
    """``U_{L-1} ... U_1 U_0 |reference>`` with factor 0 applied first."""
    return _build(reference, factors, {})


def _check_position(k: int, factors: FactorList) -> None:
    if not 0 <= k < len(factors):
        raise ContractViolation(f"factor position {k} outside 0..{len(factors) - 1}")


def build_state_with_one_derivative(reference: Determinant, factors: FactorList,
                                    k: int) -> SparseState:
    _check_position(k, factors)
    return _build(reference, factors, {k: 1})


def build_state_with_two_derivatives(reference: Determinant, factors: FactorList,
                                     k: int, m: int) -> SparseState:
    """Mixed second derivative; ``k == m`` gives the second derivative of one factor."""
    _check_position(k, factors)
    _check_position(m, factors)
    orders = {k: 2} if k == m else {k: 1, m: 1}
    return _build(reference, factors, orders)
