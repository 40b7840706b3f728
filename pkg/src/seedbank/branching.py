"""Individual-based simulation of the binary dormancy branching process and its survival probability.

An active individual dies with probability ``1 - p + eps``, splits into two
actives with probability ``(p - eps) b`` and turns into a single dormant
individual with probability ``(p - eps)(1 - b)``.  A dormant individual wakes
up (``w``), dies (``d``) or stays dormant.  The environment is constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidModel, InvalidParameter
from .mc import stream

DEFAULT_ESCAPE = 10**6
DEFAULT_BLOCK = 10_000
_TAIL_POINTS = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)


@dataclass(frozen=True)
class BinaryModelParams:
    p: float
    epsilon: float
    b: float
    w: float
    d: float

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise InvalidModel(f"p={self.p} must lie in (0, 1)")
        if not 0 <= self.epsilon < self.p:
            raise InvalidModel(f"epsilon={self.epsilon} must lie in [0, p)")
        if not 0 < self.b <= 1:
            raise InvalidModel(f"b={self.b} must lie in (0, 1]")
        if self.w < 0 or self.d < 0 or self.w + self.d > 1:
            raise InvalidModel("w, d must be nonnegative with w + d <= 1")

    @property
    def active_probs(self) -> np.ndarray:
        """Probabilities of (death, split, switch) for an active individual."""
        q = self.p - self.epsilon
        return np.array([1.0 - q, q * self.b, q * (1.0 - self.b)])

    @property
    def dormant_probs(self) -> np.ndarray:
        """Probabilities of (wake, death, stay) for a dormant individual."""
        return np.array([self.w, self.d, 1.0 - self.w - self.d])

    @property
    def means(self) -> tuple[float, float]:
        q = self.p - self.epsilon
        return 2.0 * q * self.b, q * (1.0 - self.b)


@dataclass(frozen=True)
class OneTypeModel:
    """Binary splitting without dormancy: two offspring with probability ``p``, none otherwise."""

    p: float

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise InvalidModel(f"p={self.p} must lie in (0, 1)")


Model = Union[BinaryModelParams, OneTypeModel]


@dataclass(frozen=True)
class SurvivalStats:
    survival_frequency: float
    extinction_tail: tuple[tuple[int, float], ...]
    replications: int
    generations_cap: int
    escaped: int


def _as_binary(model: Model) -> BinaryModelParams:
    if isinstance(model, OneTypeModel):
        return BinaryModelParams(model.p, 0.0, 1.0, 0.0, 0.0)
    if isinstance(model, BinaryModelParams):
        return model
    raise InvalidModel(f"unsupported model {model!r}")


def _simulate_block(model: BinaryModelParams, generations: int, n: int, escape: int, rng):
    """Extinction generation per replication (``generations + 1`` marks survival) and escape flags."""
    active = np.ones(n, dtype=np.int64)
    dormant = np.zeros(n, dtype=np.int64)
    death_time = np.full(n, generations + 1, dtype=np.int64)
    escaped = np.zeros(n, dtype=bool)
    alive = np.arange(n)
    pa, pd = model.active_probs, model.dormant_probs
    for gen in range(1, generations + 1):
        if alive.size == 0:
            break
        a = rng.multinomial(active[alive], pa)
        z = rng.multinomial(dormant[alive], pd)
        new_active = 2 * a[:, 1] + z[:, 0]
        new_dormant = a[:, 2] + z[:, 2]
        active[alive] = new_active
        dormant[alive] = new_dormant
        total = new_active + new_dormant
        died = total == 0
        death_time[alive[died]] = gen
        big = total > escape
        escaped[alive[big]] = True
        alive = alive[~died & ~big]
    return death_time, escaped


def simulate_branching(
    model: Model,
    generations: int,
    reps: int,
    seed: int,
    escape: int = DEFAULT_ESCAPE,
    block: int = DEFAULT_BLOCK,
    tail_points=None,
) -> SurvivalStats:
    """Survival frequency and empirical ``P[T > n]`` from ``reps`` independent lines started
    by one active individual.

    A line whose population exceeds ``escape`` is counted as surviving.
    Replications are simulated in blocks; block ``k`` uses its own random
    stream keyed by ``(seed, k)``.
    """
    if reps < 1 or generations < 1:
        raise InvalidParameter("reps and generations must be at least 1")
    if escape < 1 or block < 1:
        raise InvalidParameter("escape and block must be at least 1")
    params = _as_binary(model)
    times, flags = [], []
    for k, start in enumerate(range(0, reps, block)):
        n = min(block, reps - start)
        t_k, e_k = _simulate_block(params, generations, n, escape, stream(seed, k))
        times.append(t_k)
        flags.append(e_k)
    t = np.concatenate(times)
    points = sorted({x for x in (tail_points or _TAIL_POINTS) if 0 <= x < generations} | {generations})
    tail = tuple((int(x), float(np.mean(t > x))) for x in points)
    escaped_count = int(np.concatenate(flags).sum())
    return SurvivalStats(tail[-1][1], tail, reps, generations, escaped_count)


def rho_binary(model: BinaryModelParams) -> float:
    """Perron root of the mean matrix ``[[m1, m2], [w, 1 - w - d]]``."""
    m1, m2 = model.means
    stay = 1.0 - model.w - model.d
    return 0.5 * (m1 + stay + math.sqrt((m1 - stay) ** 2 + 4.0 * model.w * m2))


def survival_probability_closed_form(model: Model) -> float:
    if isinstance(model, OneTypeModel):
        return max(0.0, 2.0 - 1.0 / model.p)
    if model.epsilon != 0:
        raise InvalidParameter("the closed form needs epsilon = 0")
    if model.w + model.d == 0:
        raise InvalidParameter("the closed form needs w + d > 0")
    p, b, w, d = model.p, model.b, model.w, model.d
    return max(0.0, 2.0 - 1.0 / (b * p) + (1.0 - b) / b * w / (w + d))


def survival_probability_exact(model: Model) -> float:
    """One minus the smallest fixed point of the extinction generating function.

    The dormant extinction probability is ``(d + w s) / (d + w)`` given the
    active one ``s`` (zero if dormants never leave), which leaves the scalar
    quadratic ``g(s) = A s^2 - B s + C``; its smallest root in ``[0, 1]`` is
    bracketed by ``0`` and the vertex (or ``1``).
    """
    if isinstance(model, OneTypeModel):
        model = _as_binary(model)
    q = model.p - model.epsilon
    a = q * model.b
    switch = q * (1.0 - model.b)
    if model.w + model.d > 0:
        c = (1.0 - q) + switch * model.d / (model.w + model.d)
        bcoef = 1.0 - switch * model.w / (model.w + model.d)
    else:
        c = 1.0 - q
        bcoef = 1.0

    def g(s):
        return a * s * s - bcoef * s + c

    if c == 0:
        return 1.0
    right = min(1.0, bcoef / (2.0 * a))
    if g(right) >= 0:
        return 0.0
    return 1.0 - brentq(g, 0.0, right, xtol=1e-14, rtol=4 * np.finfo(float).eps)
