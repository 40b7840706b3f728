"""Small nonnegative-matrix primitives and the two-state Markov environment.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)`` or ``(4, 4)``.  The
matrix norm used throughout the package is the entrywise sum of absolute
values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, PeriodicChain, ReducibleChain

RANK_TOL = 1e-12
EDGE_TOL = 1e-15


@dataclass(frozen=True)
class BinaryEnvironment:
    """Two-state Markov environment; state 1 is healthy, state 2 harsh.

    ``s1`` is the probability of leaving state 1, ``s2`` of leaving state 2.
    """

    s1: float
    s2: float

    def __post_init__(self):
        s1, s2 = float(self.s1), float(self.s2)
        if not (0.0 < s1 <= 1.0 and 0.0 < s2 <= 1.0):
            raise InvalidParameter(f"switch probabilities must lie in (0, 1], got s1={s1}, s2={s2}")
        if s1 * s2 >= 1.0:
            raise InvalidParameter("s1 * s2 < 1 is required for ergodicity")
        object.__setattr__(self, "s1", s1)
        object.__setattr__(self, "s2", s2)

    @property
    def transition(self) -> np.ndarray:
        return np.array([[1.0 - self.s1, self.s1], [self.s2, 1.0 - self.s2]])

    @property
    def stationary(self) -> tuple[float, float]:
        return stationary_distribution(self)

    def pair_weights(self) -> np.ndarray:
        """Stationary law of consecutive states, ``w[i, j] = pi_i P_ij``."""
        pi = np.array(self.stationary)
        return pi[:, None] * self.transition


def stationary_distribution(env: BinaryEnvironment) -> tuple[float, float]:
    total = env.s1 + env.s2
    return env.s2 / total, env.s1 / total


def as_matrix(m, shape=(2, 2)) -> np.ndarray:
    """Validate and copy a nonnegative matrix of the given shape."""
    a = np.array(m, dtype=float)
    if a.shape != shape:
        raise InvalidParameter(f"expected a matrix of shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidParameter("matrix entries must be finite")
    if np.any(a < 0):
        raise InvalidParameter("matrix entries must be nonnegative")
    return a


def norm(m: np.ndarray) -> float:
    return float(np.abs(m).sum())


def det2(m: np.ndarray) -> float:
    return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def is_rank_one(m: np.ndarray, tol: float = RANK_TOL) -> bool:
    """Scale-invariant test ``|det M| <= tol * (max entry)^2`` (zero matrix excluded)."""
    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        return False
    return abs(det2(m)) <= tol * scale * scale


def spectral_radius_2x2(m) -> float:
    m = as_matrix(m)
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    # tr^2 - 4 det rewritten as (a-d)^2 + 4bc: no cancellation, never negative here
    return float(0.5 * (a + d + math.sqrt((a - d) ** 2 + 4.0 * b * c)))


def spectral_radius(m, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Perron root of a small nonnegative matrix.

    Power iteration on ``M + I`` (aperiodic, same Perron vector) stopped when
    the Collatz-Wielandt bounds ``min (Bx)_i/x_i <= rho(B) <= max (Bx)_i/x_i``
    agree to ``tol`` relative.  Falls back to a dense eigen-solve when the
    iterate loses strict positivity (reducible input) or does not converge.
    """
    a = np.asarray(m, dtype=float)
    n = a.shape[0]
    scale = float(a.max()) if a.size else 0.0
    if scale == 0.0:
        return 0.0
    b = a / scale + np.eye(n)
    x = np.ones(n)
    for _ in range(max_iter):
        y = b @ x
        if np.any(x <= 0) or np.any(y <= 0):
            break
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= tol * hi:
            return float(0.5 * (lo + hi) - 1.0) * scale
        x = y / y.sum()
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def _reachability(adj: np.ndarray) -> np.ndarray:
    n = adj.shape[0]
    reach = adj | np.eye(n, dtype=bool)
    for _ in range(max(1, math.ceil(math.log2(n)) + 1)):
        reach = reach | ((reach.astype(int) @ reach.astype(int)) > 0)
    return reach


def closed_classes(q: np.ndarray, tol: float = EDGE_TOL) -> list[list[int]]:
    """Closed communicating classes of the chain with edges where ``q > tol``."""
    adj = q > tol
    reach = _reachability(adj)
    n = q.shape[0]
    seen: set[int] = set()
    out = []
    for i in range(n):
        if i in seen:
            continue
        cls = [j for j in range(n) if reach[i, j] and reach[j, i]]
        seen.update(cls)
        closed = all(not adj[u, v] for u in cls for v in range(n) if v not in cls)
        if closed:
            out.append(cls)
    return out


def period(q: np.ndarray, states: list[int], tol: float = EDGE_TOL) -> int:
    """Period of an irreducible class: gcd of closed-walk lengths up to its size."""
    sub = (q[np.ix_(states, states)] > tol).astype(int)
    g = 0
    power = np.eye(len(states), dtype=int)
    for k in range(1, len(states) + 1):
        power = np.minimum(power @ sub, 1)
        if np.trace(power) > 0:
            g = math.gcd(g, k)
    return g


def check_ergodic(q: np.ndarray, allow_transient: bool = False) -> list[int]:
    """Raise unless ``q`` has a unique aperiodic recurrent class; return that class.

    With ``allow_transient=False`` the class must be the whole state space.
    """
    classes = closed_classes(q)
    n = q.shape[0]
    if len(classes) != 1 or (not allow_transient and len(classes[0]) != n):
        raise ReducibleChain(f"chain has closed classes {classes}")
    if period(q, classes[0]) != 1:
        raise PeriodicChain("recurrent class is periodic")
    return classes[0]


def stationary_distribution_n(q, allow_transient: bool = False, require_aperiodic: bool = False) -> np.ndarray:
    """Stationary row vector of a row-stochastic matrix by a direct linear solve.

    One equation of ``v (Q - I) = 0`` is replaced with ``sum(v) = 1``.  Transient
    states (only with ``allow_transient``) receive probability zero.
    """
    q = np.array(q, dtype=float)
    n = q.shape[0]
    if q.shape != (n, n) or np.any(q < 0):
        raise InvalidParameter("expected a square nonnegative matrix")
    if not np.allclose(q.sum(axis=1), 1.0, atol=1e-10, rtol=0):
        raise InvalidParameter("rows must sum to 1")
    classes = closed_classes(q)
    if len(classes) != 1 or (not allow_transient and len(classes[0]) != n):
        raise ReducibleChain(f"chain has closed classes {classes}")
    if require_aperiodic and period(q, classes[0]) != 1:
        raise PeriodicChain("recurrent class is periodic")
    system = (q - np.eye(n)).T
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    v = np.linalg.solve(system, rhs)
    v[np.abs(v) < 1e-15] = 0.0
    v = np.clip(v, 0.0, None)
    return v / v.sum()
