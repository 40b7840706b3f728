"""Seeded Monte Carlo and exact path-enumeration estimates of Lyapunov exponents.

Random streams: every replication ``r`` of a run seeded with ``seed`` draws
from a Philox generator keyed by ``SeedSequence(seed, spawn_key=(r,))``, so
results do not depend on execution order or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidParameter, KTooLarge, ZeroVector
from .exact import ExponentResult
from .linalg_env import BinaryEnvironment
from .strategies import MeanMatrixPair

MAX_ENUM_K = 22
_CHUNK_K = 16
MIN_STEPS = 100
ZERO_REPORT_STEPS = 10


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(key))))


def _path_codes(env: BinaryEnvironment, n: int, rng: np.random.Generator) -> np.ndarray:
    pi1, _ = env.stationary
    return _kernels.markov_path(rng.random(n), pi1, env.s1, env.s2)


def sample_env_path(env: BinaryEnvironment, n: int, seed: int) -> np.ndarray:
    """Stationary realisation ``I_0, ..., I_{n-1}`` with states in {1, 2}."""
    if n < 1:
        raise InvalidParameter("path length must be at least 1")
    return _path_codes(env, n, stream(seed)).astype(np.int64) + 1


def _run_reps(job, reps: int, threads: int) -> list:
    if threads <= 1 or reps == 1:
        return [job(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, range(reps)))


def _summarise(values: list[float]) -> ExponentResult:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if not math.isfinite(mean):
        return ExponentResult(mean, "mc", math.inf)
    stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else math.inf
    return ExponentResult(mean, "mc", stderr)


def _growth_rate(mats: np.ndarray, idx: np.ndarray, steps: int) -> float:
    total, done = _kernels.log_growth(mats, idx)
    if done < ZERO_REPORT_STEPS and done < idx.size:
        raise ZeroVector(f"propagated vector vanished after {done} factors")
    return total / steps


def _validate(steps: int, reps: int):
    if steps < MIN_STEPS:
        raise InvalidParameter(f"steps must be at least {MIN_STEPS}")
    if reps < 1:
        raise InvalidParameter("reps must be at least 1")


def mc_exponent(
    pair: MeanMatrixPair, env: BinaryEnvironment, steps: int, reps: int, seed: int, threads: int = 1
) -> ExponentResult:
    """Mean over replications of ``(1/steps) log ||v M(I_0) ... M(I_{steps-1})||``."""
    _validate(steps, reps)
    mats = np.ascontiguousarray(pair.stacked())

    def job(r):
        codes = _path_codes(env, steps, stream(seed, r))
        return _growth_rate(mats, codes, steps)

    return _summarise(_run_reps(job, reps, threads))


def mc_bridge_exponent(bridge, env: BinaryEnvironment, steps: int, reps: int, seed: int, threads: int = 1) -> ExponentResult:
    """Same estimator for the products ``A(I_0, I_1) A(I_1, I_2) ...`` of a bridge set.

    Replication ``r`` reuses the environment path of :func:`mc_exponent` with
    the same seed (extended by one state).
    """
    _validate(steps, reps)
    mats = np.ascontiguousarray(bridge.stacked())

    def job(r):
        codes = _path_codes(env, steps + 1, stream(seed, r)).astype(np.int64)
        idx = 2 * codes[:-1] + codes[1:]
        return _growth_rate(mats, idx, steps)

    return _summarise(_run_reps(job, reps, threads))


def _one_homogeneous(kind: str):
    def min_row(p):
        return p.sum(axis=2).min(axis=1)

    def min_col(p):
        return p.sum(axis=1).min(axis=1)

    def root_permanent(p):
        # the 2x2 permanent is 2-homogeneous; its square root keeps super-multiplicativity
        return np.sqrt(p[:, 0, 0] * p[:, 1, 1] + p[:, 0, 1] * p[:, 1, 0])

    def diag11(p):
        return p[:, 0, 0]

    table = {"min-row-sum": min_row, "min-col-sum": min_col, "permanent": root_permanent, "diag-11": diag11}
    if kind not in table:
        raise InvalidParameter(f"unknown super-multiplicative function {kind!r}; choose from {sorted(table)}")
    return table[kind]


SUPERMULTIPLICATIVE = ("min-row-sum", "min-col-sum", "permanent", "diag-11")


@dataclass(frozen=True)
class SandwichResult:
    k: int
    lower: float
    upper: float


def _expand(prods, probs, last, mats, trans, depth):
    for _ in range(depth):
        prods = np.concatenate([prods @ mats[0], prods @ mats[1]])
        probs = np.concatenate([probs * trans[last, 0], probs * trans[last, 1]])
        last = np.concatenate([np.zeros_like(last), np.ones_like(last)])
    return prods, probs, last


def _expected_logs(prods, probs, f):
    with np.errstate(divide="ignore"):
        lf = np.log(f(prods))
        ln = np.log(prods.sum(axis=(1, 2)))
    keep = probs > 0
    return float(np.sum(probs[keep] * lf[keep])), float(np.sum(probs[keep] * ln[keep]))


def enumerated_sandwich(pair: MeanMatrixPair, env: BinaryEnvironment, k: int, f: str = "min-row-sum") -> SandwichResult:
    """Exact ``(1/k) E[log f(M_1...M_k)]`` and ``(1/k) E[log ||M_1...M_k||]`` over all 2^k paths.

    Paths longer than 16 are processed in chunks sharing a common prefix.
    """
    if k < 1:
        raise InvalidParameter("k must be at least 1")
    if k > MAX_ENUM_K:
        raise KTooLarge(f"k={k} exceeds {MAX_ENUM_K}")
    fn = _one_homogeneous(f)
    mats = pair.stacked()
    trans = env.transition
    pi = np.array(env.stationary)
    head = max(0, k - _CHUNK_K)
    prods, probs, last = _expand(mats.copy(), pi.copy(), np.array([0, 1]), mats, trans, head)
    lower = upper = 0.0
    for c in range(prods.shape[0]):
        sub = _expand(prods[c : c + 1], probs[c : c + 1], last[c : c + 1], mats, trans, k - 1 - head)
        lo, up = _expected_logs(sub[0], sub[1], fn)
        lower += lo
        upper += up
    return SandwichResult(k, lower / k, upper / k)
