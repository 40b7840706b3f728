"""Closed-form maximal Lyapunov exponents.

Covers the process without dormancy and every strategy whose mean matrices
have rank one.  All formulas are evaluated in log space; a vanishing log
argument yields ``-inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameter, NonPositiveTrace, NotRankOne
from .linalg_env import RANK_TOL, BinaryEnvironment, det2, is_rank_one
from .strategies import MeanMatrixPair

METHODS = ("exact-trace", "exact-theorem", "one-type", "mc", "bound-upper", "bound-lower", "sandwich")


@dataclass(frozen=True)
class ExponentResult:
    value: float
    method: str
    stderr: Optional[float] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method label {self.method!r}")

    def interval(self, width: float = 3.0) -> tuple[float, float]:
        if self.stderr is None:
            return self.value, self.value
        return self.value - width * self.stderr, self.value + width * self.stderr


def _log(x: float) -> float:
    if x < 0:
        raise InvalidParameter(f"logarithm of negative number {x}")
    return math.log(x) if x > 0 else -math.inf


def _weighted(terms) -> float:
    """Sum of ``weight * log`` terms with the convention ``0 * -inf = 0``."""
    total = 0.0
    for weight, logval in terms:
        if weight == 0:
            continue
        total += weight * logval
    return total


def one_type_exponent(m1: float, m2: float, env: BinaryEnvironment) -> ExponentResult:
    if not (m1 > 0 and m2 > 0):
        raise InvalidParameter("offspring means must be positive")
    p1, p2 = env.stationary
    return ExponentResult(p1 * math.log(m1) + p2 * math.log(m2), "one-type")


def _check_rates(m1, m2, d1, d2):
    if not (m1 > 0 and m2 > 0):
        raise InvalidParameter("offspring means must be positive")
    if not (0 <= d1 < 1 and 0 <= d2 < 1):
        raise InvalidParameter("dormant death probabilities must lie in [0, 1)")


def responsive_exponent(m1, m2, d1, d2, env: BinaryEnvironment) -> ExponentResult:
    _check_rates(m1, m2, d1, d2)
    s1, s2 = env.s1, env.s2
    ratio = math.log(m2) + math.log1p(-d1) - math.log(m1) - math.log1p(-d2)
    value = (s2 * math.log(m1) + s1 * math.log1p(-d2) + s1 * s2 * ratio) / (s1 + s2)
    return ExponentResult(value, "exact-theorem")


def prescient_exponent(m1, m2, d1, d2, env: BinaryEnvironment) -> ExponentResult:
    _check_rates(m1, m2, d1, d2)
    s1, s2 = env.s1, env.s2
    ratio = math.log(m1) + math.log1p(-d2) - math.log(m2) - math.log1p(-d1)
    value = (s2 * math.log1p(-d1) + s1 * math.log(m2) + s1 * s2 * ratio) / (s1 + s2)
    return ExponentResult(value, "exact-theorem")


def stochastic_rank1_exponent(
    m_a, m_d, w1, w2, alpha, env: BinaryEnvironment, d1=None, d2=None, tol: float = RANK_TOL
) -> ExponentResult:
    """Exponent of a stochastic switcher whose mean matrices are singular.

    Without explicit ``d1``/``d2`` the death probabilities implied by a zero
    determinant, ``d = 1 - w (1 + m_d/m_a)``, are used and must be valid
    probabilities.  With explicit values the determinants are checked.
    """
    if not m_a > 0 or m_d < 0:
        raise InvalidParameter("m_a must be positive and m_d nonnegative")
    if not 0 <= alpha <= 1:
        raise InvalidParameter("alpha must lie in [0, 1]")
    r = m_d / m_a
    for e, w, d in ((1, w1, d1), (2, w2, d2)):
        if not 0 <= w <= 1:
            raise InvalidParameter(f"w{e} must lie in [0, 1]")
        implied = 1.0 - w * (1.0 + r)
        if d is None:
            if implied < -tol or implied > 1.0:
                raise NotRankOne(f"no valid death probability makes det M({e}) vanish (d{e}={implied})")
        else:
            scale = 1.0 if e == 1 else alpha
            row = np.array([[scale * m_a, scale * m_d], [w, 1.0 - w - d]])
            if not is_rank_one(row, tol):
                raise NotRankOne(f"det M({e}) = {det2(row)}")
    s1, s2 = env.s1, env.s2
    value = _weighted(
        [(s2, _log(m_a + w1 * r)), (s1, _log(alpha * m_a + w2 * r))]
    ) / (s1 + s2)
    return ExponentResult(value, "exact-theorem")


def rank1_trace_exponent(pair: MeanMatrixPair, env: BinaryEnvironment, tol: float = RANK_TOL) -> ExponentResult:
    """Exponent of a pair of rank-1 matrices from traces of ``M(1)``, ``M(2)`` and ``M(1) M(2)``."""
    for e in (1, 2):
        if not is_rank_one(pair[e], tol):
            raise NotRankOne(f"det M({e}) = {det2(pair[e])}")
        if not np.trace(pair[e]) > 0:
            raise NonPositiveTrace(f"tr M({e}) = {np.trace(pair[e])}")
    s1, s2 = env.s1, env.s2
    t1 = float(np.trace(pair.m1))
    t2 = float(np.trace(pair.m2))
    t12 = float(np.trace(pair.m1 @ pair.m2))
    total = s1 + s2
    value = (
        s2 / total * math.log(t1)
        + s1 / total * math.log(t2)
        + _weighted([(s1 * s2 / total, _log(t12) - math.log(t1) - math.log(t2))])
    )
    return ExponentResult(value, "exact-trace")
