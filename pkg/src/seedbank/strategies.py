"""Mean-matrix pairs of the switching strategies and (gamma-weighted) fair comparison.

Every strategy is described by a small frozen dataclass whose ``build()``
returns a :class:`MeanMatrixPair`; the parameters, not the matrices, are the
source of truth (a dormant death probability is only recoverable from a
matrix as ``1 - row-2 sum``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidParameter, NotRankOne, NotStochasticShape
from .linalg_env import as_matrix, det2, is_rank_one

FAIR_TOL = 1e-9
DEFAULT_DEATH = 0.2


@dataclass(frozen=True)
class MeanMatrixPair:
    """Mean matrices ``m1`` (healthy state) and ``m2`` (harsh state).

    Row 1 holds the mean active/dormant offspring of an active individual,
    row 2 the wake/stay probabilities of a dormant one, so row 2 must be
    sub-stochastic.
    """

    m1: np.ndarray
    m2: np.ndarray

    def __post_init__(self):
        for name in ("m1", "m2"):
            m = as_matrix(getattr(self, name))
            if m[1].sum() > 1.0 + 1e-12:
                raise InvalidParameter(f"{name}: dormant row sums to {m[1].sum()} > 1")
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    def __getitem__(self, e: int) -> np.ndarray:
        """Matrix for environment state ``e`` in {1, 2}."""
        if e == 1:
            return self.m1
        if e == 2:
            return self.m2
        raise IndexError(e)

    def stacked(self) -> np.ndarray:
        return np.stack([self.m1, self.m2])

    def scaled(self, c: float) -> "MeanMatrixPair":
        """``c * M(e)`` without the dormant-row check (used by scaling tests only)."""
        out = object.__new__(MeanMatrixPair)
        object.__setattr__(out, "m1", c * self.m1)
        object.__setattr__(out, "m2", c * self.m2)
        return out

    def death(self, e: int) -> float:
        return float(1.0 - self[e][1].sum())

    def __eq__(self, other):
        return (
            isinstance(other, MeanMatrixPair)
            and np.array_equal(self.m1, other.m1)
            and np.array_equal(self.m2, other.m2)
        )

    def __hash__(self):
        return hash((self.m1.tobytes(), self.m2.tobytes()))


def _check_prob(name, x, upper_open=False):
    if not (0.0 <= x <= 1.0) or (upper_open and x >= 1.0):
        bound = "[0, 1)" if upper_open else "[0, 1]"
        raise InvalidParameter(f"{name}={x} must lie in {bound}")


def _check_positive(name, x):
    if not x > 0.0:
        raise InvalidParameter(f"{name}={x} must be positive")


@dataclass(frozen=True)
class OneType:
    """A process without dormancy embedded as a reducible 2-type process."""

    m1: float
    m2: float
    d1: float = DEFAULT_DEATH
    d2: float = DEFAULT_DEATH

    def build(self) -> MeanMatrixPair:
        _check_positive("m1", self.m1)
        _check_positive("m2", self.m2)
        _check_prob("d1", self.d1, upper_open=True)
        _check_prob("d2", self.d2, upper_open=True)
        return MeanMatrixPair(
            np.array([[self.m1, 0.0], [1.0 - self.d1, 0.0]]),
            np.array([[self.m2, 0.0], [1.0 - self.d2, 0.0]]),
        )


@dataclass(frozen=True)
class Responsive:
    """All-active offspring in the healthy state, all-dormant in the harsh state."""

    m1: float
    m2: float
    d1: float
    d2: float

    def build(self) -> MeanMatrixPair:
        _check_positive("m1", self.m1)
        _check_positive("m2", self.m2)
        _check_prob("d1", self.d1, upper_open=True)
        _check_prob("d2", self.d2, upper_open=True)
        return MeanMatrixPair(
            np.array([[self.m1, 0.0], [1.0 - self.d1, 0.0]]),
            np.array([[0.0, self.m2], [0.0, 1.0 - self.d2]]),
        )


@dataclass(frozen=True)
class Prescient:
    """The mirror image of :class:`Responsive`."""

    m1: float
    m2: float
    d1: float
    d2: float

    def build(self) -> MeanMatrixPair:
        _check_positive("m1", self.m1)
        _check_positive("m2", self.m2)
        _check_prob("d1", self.d1, upper_open=True)
        _check_prob("d2", self.d2, upper_open=True)
        return MeanMatrixPair(
            np.array([[0.0, self.m1], [0.0, 1.0 - self.d1]]),
            np.array([[self.m2, 0.0], [1.0 - self.d2, 0.0]]),
        )


@dataclass(frozen=True)
class Stochastic:
    """Environment-blind switching; harsh-state offspring means are scaled by ``alpha``."""

    m_a: float
    m_d: float
    w1: float
    w2: float
    d1: float
    d2: float
    alpha: float

    def build(self) -> MeanMatrixPair:
        if self.m_a < 0 or self.m_d < 0 or self.m_a + self.m_d <= 0:
            raise InvalidParameter("m_a, m_d must be nonnegative and not both zero")
        _check_prob("alpha", self.alpha, upper_open=True)
        for e, (w, d) in enumerate(((self.w1, self.d1), (self.w2, self.d2)), start=1):
            _check_prob(f"w{e}", w)
            _check_prob(f"d{e}", d, upper_open=True)
            if w + d > 1.0 + 1e-12:
                raise InvalidParameter(f"w{e} + d{e} = {w + d} exceeds 1")
        a = self.alpha
        return MeanMatrixPair(
            np.array([[self.m_a, self.m_d], [self.w1, max(0.0, 1.0 - self.w1 - self.d1)]]),
            np.array([[a * self.m_a, a * self.m_d], [self.w2, max(0.0, 1.0 - self.w2 - self.d2)]]),
        )


@dataclass(frozen=True)
class ConvexCombination:
    """Each newborn follows the prescient rule with probability ``q(e)``, else the responsive one."""

    responsive: Responsive
    prescient: Prescient
    q1: float
    q2: float

    def build(self) -> MeanMatrixPair:
        _check_prob("q1", self.q1)
        _check_prob("q2", self.q2)
        res = self.responsive.build()
        pre = self.prescient.build()
        return MeanMatrixPair(
            self.q1 * pre.m1 + (1.0 - self.q1) * res.m1,
            self.q2 * pre.m2 + (1.0 - self.q2) * res.m2,
        )


StrategySpec = Union[OneType, Responsive, Prescient, Stochastic, ConvexCombination]


def build(spec: StrategySpec) -> MeanMatrixPair:
    return spec.build()


@dataclass(frozen=True)
class FairnessReport:
    gamma: float
    rowsum_mismatch: float
    death_mismatch: float

    @property
    def passed(self) -> bool:
        return self.rowsum_mismatch <= FAIR_TOL and self.death_mismatch <= FAIR_TOL

    # the field is named ``pass`` in reports; ``pass`` is a keyword in Python
    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "rowsum_mismatch": self.rowsum_mismatch,
            "death_mismatch": self.death_mismatch,
            "pass": self.passed,
        }


def check_fair_comparison(a: MeanMatrixPair, b: MeanMatrixPair, gamma: float = 1.0) -> FairnessReport:
    """Compare the gamma-weighted active offspring mass and the dormant death mass per state."""
    if not gamma > 0:
        raise InvalidParameter("gamma must be positive")
    weights = np.array([1.0, gamma])
    rows = max(abs(float(a[e][0] @ weights - b[e][0] @ weights)) for e in (1, 2))
    deaths = max(abs(a.death(e) - b.death(e)) for e in (1, 2))
    return FairnessReport(float(gamma), rows, deaths)


def stochastic_shape(pair: MeanMatrixPair, tol: float = 1e-12) -> tuple[float, float, float]:
    """Return ``(m_a, m_d, alpha)`` if row 1 of ``M(2)`` is ``alpha`` times row 1 of ``M(1)``."""
    r1, r2 = pair.m1[0], pair.m2[0]
    total = r1.sum()
    if total <= 0:
        raise NotStochasticShape("active row of M(1) is zero")
    alpha = r2.sum() / total
    if np.max(np.abs(r2 - alpha * r1)) > tol * max(1.0, total):
        raise NotStochasticShape("active rows are not proportional")
    if not 0.0 <= alpha < 1.0:
        raise NotStochasticShape(f"alpha={alpha} outside [0, 1)")
    return float(r1[0]), float(r1[1]), float(alpha)


def stochastic_as_cc(pair: MeanMatrixPair) -> tuple[float, float]:
    """Weights ``(q1, q2)`` representing a rank-1 stochastic switcher as a responsive/prescient mix."""
    m_a, m_d, _ = stochastic_shape(pair)
    if not (is_rank_one(pair.m1) and is_rank_one(pair.m2)):
        raise NotRankOne(f"det M(1)={det2(pair.m1)}, det M(2)={det2(pair.m2)}")
    s = m_a + m_d
    return m_d / s, m_a / s


def cc_from_stochastic(pair: MeanMatrixPair) -> ConvexCombination:
    """The convex combination (fair at gamma = 1) that reproduces a rank-1 stochastic pair."""
    m_a, m_d, alpha = stochastic_shape(pair)
    q1, q2 = stochastic_as_cc(pair)
    s = m_a + m_d
    d1, d2 = pair.death(1), pair.death(2)
    return ConvexCombination(
        Responsive(s, alpha * s, d1, d2), Prescient(s, alpha * s, d1, d2), q1, q2
    )


def strong_advantage_family(alpha: float, gamma: float = 1.0) -> dict[str, StrategySpec]:
    """The four strategies of the seed-bank strong-advantage example, gamma-adjusted.

    Offspring mass 4 in the healthy state and ``4 alpha`` in the harsh one,
    dormant death 1/5, stochastic wake probability 2/5.
    """
    if not gamma > 0:
        raise InvalidParameter("gamma must be positive")
    _check_prob("alpha", alpha, upper_open=True)
    m = 4.0 / (1.0 + gamma)
    return {
        "X": OneType(4.0, 4.0 * alpha),
        "res": Responsive(4.0, 4.0 * alpha / gamma, 0.2, 0.2),
        "sto": Stochastic(m, m, 0.4, 0.4, 0.2, 0.2, alpha),
        "pre": Prescient(4.0 / gamma, 4.0 * alpha, 0.2, 0.2),
    }


def convex_preset(alpha: float, q: float, gamma: float = 1.0) -> ConvexCombination:
    fam = strong_advantage_family(alpha, gamma)
    return ConvexCombination(fam["res"], fam["pre"], q, q)


def delta_preset(alpha: float) -> Stochastic:
    """Stochastic switcher with ``det M(e) = alpha^(e-1) > 0``."""
    return Stochastic(13 / 4, 3 / 4, 0.4, 0.4, 0.2, 0.2, alpha)


def nabla_preset(alpha: float) -> Stochastic:
    """Stochastic switcher with ``det M(e) = -alpha^(e-1) < 0``."""
    return Stochastic(3 / 4, 13 / 4, 0.4, 0.4, 0.2, 0.2, alpha)
