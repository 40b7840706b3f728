"""Rank-2 factorisations, bridge matrices and bounds on the maximal Lyapunov exponent.

A nonnegative 2x2 matrix is written as ``l1 r1^T + l2 r2^T`` with nonnegative
vectors.  Chaining the factorisations of consecutive environment states gives
the bridge matrices ``A(i, j)[y, z] = <r^y(i), l^z(j)>`` whose products have
the same exponential growth as the original products.  Upper bounds come from
Jensen's inequality on a 4x4 Perron root, lower bounds from Markov measures on
the bridge index paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidParameter, NoValidSample, NonErgodicChain, SchemePreconditionFailed, ShapeMismatch
from .exact import ExponentResult
from .linalg_env import (
    RANK_TOL,
    BinaryEnvironment,
    as_matrix,
    det2,
    norm,
    spectral_radius,
    spectral_radius_2x2,
    stationary_distribution_n,
)
from .strategies import MeanMatrixPair, stochastic_shape

SCHEMES = ("row", "column", "pos-det", "neg-det")
_SHAPE_TOL = 1e-12


@dataclass(frozen=True)
class FactorPair:
    """``M = l1 r1^T + l2 r2^T``; ``left[y]`` is ``l^(y+1)``, ``right[y]`` is ``r^(y+1)``."""

    left: np.ndarray
    right: np.ndarray
    scheme: str

    def reconstruct(self) -> np.ndarray:
        return np.outer(self.left[0], self.right[0]) + np.outer(self.left[1], self.right[1])


def decompose(m, scheme: str) -> FactorPair:
    with np.errstate(over="ignore", invalid="ignore"):
        return _decompose(as_matrix(m).astype(np.float64), scheme)


def _decompose(m: np.ndarray, scheme: str) -> FactorPair:
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    det = det2(m)
    # det / pivot may come out slightly negative for singular input; that much is rounding
    slack = RANK_TOL * float(m.max())
    if scheme == "row":
        left, right = [[1, 0], [0, 1]], [[a, b], [c, d]]
    elif scheme == "column":
        left, right = [[a, c], [b, d]], [[1, 0], [0, 1]]
    elif scheme == "pos-det":
        if not (a > 0 and det / a >= -slack):
            raise SchemePreconditionFailed(f"pos-det needs a > 0 and det >= 0 (a={a}, det={det})")
        left, right = [[a, c], [0, 1]], [[1, b / a], [0, max(det / a, 0.0)]]
    elif scheme == "neg-det":
        if not (b > 0 and -det / b >= -slack):
            raise SchemePreconditionFailed(f"neg-det needs b > 0 and det <= 0 (b={b}, det={det})")
        left, right = [[b, d], [0, 1]], [[a / b, 1], [max(-det / b, 0.0), 0]]
    else:
        raise InvalidParameter(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    left = np.array(left, dtype=float)
    right = np.array(right, dtype=float) + 0.0  # drop signed zeros
    if not np.all(np.isfinite(right)):
        raise SchemePreconditionFailed(f"{scheme} split is numerically unusable (pivot too small)")
    return FactorPair(left, right, scheme)


@dataclass(frozen=True)
class BridgeSet:
    """``mats[i-1, j-1]`` is the bridge matrix ``A(i, j)``."""

    mats: np.ndarray

    def __call__(self, i: int, j: int) -> np.ndarray:
        return self.mats[i - 1, j - 1]

    def stacked(self) -> np.ndarray:
        """Shape ``(4, 2, 2)`` in the order A(1,1), A(1,2), A(2,1), A(2,2)."""
        return self.mats.reshape(4, 2, 2)


def bridge_matrices(f1: FactorPair, f2: FactorPair) -> BridgeSet:
    factors = (f1, f2)
    mats = np.empty((2, 2, 2, 2))
    for i in range(2):
        for j in range(2):
            mats[i, j] = factors[i].right @ factors[j].left.T
    return BridgeSet(mats)


def bridge_for(pair: MeanMatrixPair, scheme: str) -> BridgeSet:
    return bridge_matrices(decompose(pair.m1, scheme), decompose(pair.m2, scheme))


def _expect_pairs(env: BinaryEnvironment, values: np.ndarray) -> float:
    """``E[g(I_0, I_1)]`` with the convention ``0 * -inf = 0``."""
    w = env.pair_weights()
    keep = w > 0
    return float(np.sum(w[keep] * values[keep]))


def jensen_upper_bound(bridge: BridgeSet, env: BinaryEnvironment, lam=None) -> ExponentResult:
    """``E[log lam(I_0, I_1)] + log rho`` of the 4x4 matrix with blocks ``P(i, j) A(i, j) / lam(i, j)``.

    ``lam`` defaults to ``rho(A(i, j))``, which for the row scheme is
    ``rho(M(i))``.
    """
    if lam is None:
        lam = np.array([[spectral_radius_2x2(bridge(i, j)) for j in (1, 2)] for i in (1, 2)])
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (2, 2) or not np.all(lam > 0):
        raise InvalidParameter("lambda must be four positive numbers")
    p = env.transition
    big = np.block([[p[i, j] * bridge.mats[i, j] / lam[i, j] for j in range(2)] for i in range(2)])
    rho = spectral_radius(big, tol=1e-12)
    log_rho = math.log(rho) if rho > 0 else -math.inf
    return ExponentResult(_expect_pairs(env, np.log(lam)) + log_rho, "bound-upper")


def dirac_lower_bound(pair: MeanMatrixPair, env: BinaryEnvironment) -> ExponentResult:
    """Lower bound from the path that always follows the active type, for a stochastic
    switcher whose dormant rows coincide in both states."""
    m_a, _, alpha = stochastic_shape(pair)
    if np.max(np.abs(pair.m1[1] - pair.m2[1])) > _SHAPE_TOL:
        raise ShapeMismatch("dormant rows of M(1) and M(2) differ (w1 != w2 or d1 != d2)")
    if not 0 < alpha < 1:
        raise ShapeMismatch(f"alpha={alpha} must lie in (0, 1)")
    if m_a <= 0:
        raise ShapeMismatch("m_a must be positive")
    shift = max(det2(pair.m1) / m_a, 0.0)
    pi = env.stationary
    terms = []
    for e in (1, 2):
        arg = float(np.trace(pair[e])) - shift
        terms.append(pi[e - 1] * (math.log(arg) if arg > 0 else -math.inf))
    return ExponentResult(sum(terms), "bound-lower")


def entropy_h(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log1p(-x)


def _as_mu(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float).reshape(2, 2, 2)
    if np.any(mu < 0) or np.any(mu > 1) or not np.all(np.isfinite(mu)):
        raise InvalidParameter("mu entries must lie in [0, 1]")
    return mu


def build_q(mu, env: BinaryEnvironment) -> np.ndarray:
    """4x4 chain on pairs ``(i, y)``, index ``2 (i-1) + (y-1)``; ``mu[i-1, j-1, y-1]`` is the
    probability of moving to type 1 when the environment steps from ``i`` to ``j``."""
    mu = _as_mu(mu)
    p = env.transition
    q = np.zeros((4, 4))
    for i in range(2):
        for y in range(2):
            for j in range(2):
                q[2 * i + y, 2 * j] = p[i, j] * mu[i, j, y]
                q[2 * i + y, 2 * j + 1] = p[i, j] * (1.0 - mu[i, j, y])
    return q


def markov_entropy_lower_bound(bridge: BridgeSet, mu, env: BinaryEnvironment) -> ExponentResult:
    """``sum q_iy Q[(i,y),(j,z)] (log A(i,j)[y,z] + h(mu_ijy))`` for the stationary ``q`` of ``Q``.

    ``Q`` may have transient states but needs a single aperiodic recurrent
    class; otherwise :class:`ReducibleChain` or :class:`PeriodicChain` is raised.
    """
    mu = _as_mu(mu)
    q = build_q(mu, env)
    stat = stationary_distribution_n(q, allow_transient=True, require_aperiodic=True)
    total = 0.0
    for i in range(2):
        for y in range(2):
            for j in range(2):
                h = entropy_h(mu[i, j, y])
                for z in range(2):
                    weight = stat[2 * i + y] * q[2 * i + y, 2 * j + z]
                    if weight == 0.0:
                        continue
                    a = bridge.mats[i, j, y, z]
                    if a <= 0.0:
                        return ExponentResult(-math.inf, "bound-lower")
                    total += weight * (math.log(a) + h)
    return ExponentResult(total, "bound-lower")


def _perron(m: np.ndarray) -> tuple[float, np.ndarray]:
    rho = spectral_radius_2x2(m)
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    # right eigenvector of [[a, b], [c, d]] for rho, picking the better-conditioned row
    if abs(b) + abs(rho - a) >= abs(c) + abs(rho - d):
        v = np.array([b, rho - a])
    else:
        v = np.array([rho - d, c])
    v = np.abs(v)
    if v.sum() == 0.0:
        v = np.array([1.0, 0.0]) if a >= d else np.array([0.0, 1.0])
    return rho, v / v.sum()


def hl16_theta(m) -> np.ndarray:
    """``diag(v)^-1 (M / rho) diag(v)`` for the right Perron vector ``v``; rows sum to one."""
    m = as_matrix(m)
    rho, v = _perron(m)
    if rho <= 0 or np.any(v <= 0):
        raise InvalidParameter("Perron vector must be strictly positive")
    return (m / rho) * v[None, :] / v[:, None]


def hl16_mu(pair: MeanMatrixPair) -> np.ndarray:
    """``mu[i, j, y] = Theta(i)[y, 1]``, independent of the next state ``j``."""
    mu = np.empty((2, 2, 2))
    for i in range(2):
        theta = hl16_theta(pair[i + 1])
        for j in range(2):
            mu[i, j, :] = np.clip(theta[:, 0], 0.0, 1.0)
    return mu


def hl16_lower_bound_direct(pair: MeanMatrixPair, env: BinaryEnvironment) -> ExponentResult:
    """``E[log rho(M(I_0))] + q (I - blockdiag Theta) log v`` evaluated without the bridge machinery."""
    mu = hl16_mu(pair)
    q = build_q(mu, env)
    stat = stationary_distribution_n(q, allow_transient=True, require_aperiodic=True)
    pi = env.stationary
    total = 0.0
    blocks = np.zeros((4, 4))
    logv = np.zeros(4)
    for e in (1, 2):
        rho, v = _perron(pair[e])
        total += pi[e - 1] * math.log(rho)
        blocks[2 * (e - 1) : 2 * e, 2 * (e - 1) : 2 * e] = hl16_theta(pair[e])
        logv[2 * (e - 1) : 2 * e] = np.log(v)
    total += float(stat @ (np.eye(4) - blocks) @ logv)
    return ExponentResult(total, "bound-lower")


def optimize_markov_lower_bound(
    bridge: BridgeSet,
    env: BinaryEnvironment,
    n_samples: int,
    seed: int,
    include_mu: Sequence = (),
) -> tuple[float, np.ndarray]:
    """Best Markov lower bound over uniformly drawn ``mu`` plus any given candidates.

    Draws whose chain is not ergodic are skipped.  Ties are broken by the
    lexicographically smallest ``mu``.
    """
    if n_samples < 1:
        raise InvalidParameter("n_samples must be at least 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    candidates = list(rng.random((n_samples, 2, 2, 2))) + [_as_mu(m) for m in include_mu]
    best: Optional[tuple[float, tuple]] = None
    best_mu = None
    for mu in candidates:
        try:
            value = markov_entropy_lower_bound(bridge, mu, env).value
        except NonErgodicChain:
            continue
        key = (value, tuple(-x for x in mu.ravel()))
        if best is None or key > best:
            best, best_mu = key, mu
    if best is None:
        raise NoValidSample("every sampled mu gave a non-ergodic chain")
    return best[0], best_mu


@dataclass(frozen=True)
class NormBounds:
    lower: ExponentResult
    upper: ExponentResult
    components: dict = field(default_factory=dict)


def _expect_states(env: BinaryEnvironment, values) -> float:
    total = 0.0
    for p, v in zip(env.stationary, values):
        if p > 0:
            total += p * v
    return total


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def norm_bounds(pair: MeanMatrixPair, env: BinaryEnvironment) -> NormBounds:
    """Elementary bounds from single-factor functionals.

    Lower candidates: ``log rho(M(2))`` when ``M(2) <= M(1)`` entrywise, and
    ``E[log f(M(I_0))]`` for the minimal row sum, minimal column sum and the
    square root of the permanent.  Upper candidates: ``log rho(M(1))`` when
    ordered, and ``E[log ||M(I_0)||] + Psi`` with ``Psi <= 0`` measuring how much
    the norm is sub-multiplicative across one switch.
    """
    s1, s2 = env.s1, env.s2
    ms = (pair.m1, pair.m2)
    comp: dict[str, float] = {}
    ordered = bool(np.all(pair.m2 <= pair.m1))
    if ordered:
        comp["ordered_lower"] = _safe_log(spectral_radius_2x2(pair.m2))
        comp["ordered_upper"] = _safe_log(spectral_radius_2x2(pair.m1))
    comp["min_row_sum"] = _expect_states(env, [_safe_log(m.sum(axis=1).min()) for m in ms])
    comp["min_col_sum"] = _expect_states(env, [_safe_log(m.sum(axis=0).min()) for m in ms])
    comp["permanent"] = _expect_states(
        env, [0.5 * _safe_log(m[0, 0] * m[1, 1] + m[0, 1] * m[1, 0]) for m in ms]
    )
    n1, n2 = norm(pair.m1), norm(pair.m2)
    cross = min(norm(pair.m1 @ pair.m2), norm(pair.m2 @ pair.m1))
    if n1 > 0 and n2 > 0:
        psi = s1 * s2 / (s1 + s2) * (_safe_log(cross) - math.log(n1) - math.log(n2))
    else:
        psi = 0.0
    comp["psi"] = psi
    comp["norm_psi"] = _expect_states(env, [_safe_log(n1), _safe_log(n2)]) + psi
    lower = max(comp[k] for k in ("ordered_lower", "min_row_sum", "min_col_sum", "permanent") if k in comp)
    upper = min(comp[k] for k in ("ordered_upper", "norm_psi") if k in comp)
    return NormBounds(ExponentResult(lower, "bound-lower"), ExponentResult(upper, "bound-upper"), comp)
