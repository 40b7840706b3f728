"""Phase diagrams of strategy exponents over the environment switching probabilities.

Each grid cell evaluates every strategy of a (gamma-weighted) fair family,
picks the dominant one and decides whether it has a strong advantage, i.e. a
positive exponent while every competitor is at most zero.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import DomainError, InvalidParameter, UnfairConfiguration
from .exact import (
    ExponentResult,
    one_type_exponent,
    prescient_exponent,
    rank1_trace_exponent,
    responsive_exponent,
    stochastic_rank1_exponent,
)
from .linalg_env import BinaryEnvironment, is_rank_one
from .mc import enumerated_sandwich, mc_exponent
from .strategies import (
    OneType,
    Prescient,
    Responsive,
    Stochastic,
    StrategySpec,
    check_fair_comparison,
    convex_preset,
    strong_advantage_family,
)

LABEL_ORDER = ("X", "res", "sto", "pre", "cc")
TIE_TOL = 1e-12
CI_WIDTH = 3.0


def _order_key(label: str) -> tuple[int, str]:
    base = label.split("(")[0]
    rank = LABEL_ORDER.index(base) if base in LABEL_ORDER else len(LABEL_ORDER)
    return rank, label


def sorted_labels(labels) -> list[str]:
    return sorted(labels, key=_order_key)


def classify_cell(exponents: dict[str, float]) -> tuple[str, bool, bool]:
    """Return ``(dominant, strong, tied)`` from point values.

    Ties within ``1e-12`` go to the earliest label in the order
    X, res, sto, pre, cc.
    """
    if len(exponents) < 2:
        raise InvalidParameter("need at least two strategies")
    labels = sorted_labels(exponents)
    best = max(exponents[k] for k in labels)
    winners = [k for k in labels if exponents[k] >= best - TIE_TOL]
    dominant = winners[0]
    strong = best > 0 and all(exponents[k] <= 0 for k in labels if k != dominant)
    return dominant, bool(strong), len(winners) > 1


@dataclass(frozen=True)
class ScanConfig:
    alpha: float
    gamma: float = 1.0
    grid: int = 40
    grid_mode: str = "center"
    cc_q: tuple[float, ...] = ()
    rank2_method: str = "mc"
    mc_steps: int = 200_000
    mc_reps: int = 8
    sandwich_k: int = 12
    seed: int = 0
    threads: int = 1
    strategies: Optional[dict] = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidParameter("alpha must lie in (0, 1)")
        if not self.gamma > 0:
            raise InvalidParameter("gamma must be positive")
        if self.grid < 2:
            raise InvalidParameter("grid must be at least 2")
        if self.grid_mode not in ("center", "edge"):
            raise InvalidParameter("grid_mode must be 'center' or 'edge'")
        if self.rank2_method not in ("mc", "sandwich"):
            raise InvalidParameter("rank2_method must be 'mc' or 'sandwich'")

    def members(self) -> dict[str, StrategySpec]:
        if self.strategies is not None:
            return dict(self.strategies)
        out: dict[str, StrategySpec] = dict(strong_advantage_family(self.alpha, self.gamma))
        for q in self.cc_q:
            out[f"cc({q:g})"] = convex_preset(self.alpha, q, self.gamma)
        return out


@dataclass(frozen=True)
class PhaseCell:
    s1: float
    s2: float
    exponents: dict
    intervals: dict
    dominant: str
    strong: bool
    tied: bool
    uncertain: bool
    methods: dict = field(default_factory=dict)


def grid_points(grid: int, mode: str = "center") -> list[tuple[float, float]]:
    """Cell centres ``(i + 1/2)/grid``, or ``(i + 1)/grid`` without the corner ``(1, 1)``."""
    if mode == "center":
        axis = [(i + 0.5) / grid for i in range(grid)]
    else:
        axis = [(i + 1) / grid for i in range(grid)]
    return [(a, b) for a in axis for b in axis if a * b < 1.0]


def assert_fair(members: dict[str, StrategySpec], gamma: float) -> None:
    pairs = {k: v.build() for k, v in members.items()}
    for a, b in combinations(sorted_labels(pairs), 2):
        report = check_fair_comparison(pairs[a], pairs[b], gamma)
        if not report.passed:
            raise UnfairConfiguration(f"{a} vs {b} is not a fair comparison at gamma={gamma}: {report.as_dict()}")


def _cell_seed(seed: int, *key: int) -> int:
    state = np.random.SeedSequence(int(seed), spawn_key=tuple(key)).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def member_exponent(spec: StrategySpec, env: BinaryEnvironment, config: ScanConfig, seed: int):
    """Exact value where a closed form applies, otherwise MC or the Key sandwich.

    Returns the result and a conservative ``(lo, hi)`` interval.
    """
    if isinstance(spec, OneType):
        r = one_type_exponent(spec.m1, spec.m2, env)
    elif isinstance(spec, Responsive):
        r = responsive_exponent(spec.m1, spec.m2, spec.d1, spec.d2, env)
    elif isinstance(spec, Prescient):
        r = prescient_exponent(spec.m1, spec.m2, spec.d1, spec.d2, env)
    else:
        pair = spec.build()
        rank1 = is_rank_one(pair.m1) and is_rank_one(pair.m2)
        if rank1 and isinstance(spec, Stochastic):
            r = stochastic_rank1_exponent(
                spec.m_a, spec.m_d, spec.w1, spec.w2, spec.alpha, env, d1=spec.d1, d2=spec.d2
            )
        elif rank1 and np.trace(pair.m1) > 0 and np.trace(pair.m2) > 0:
            r = rank1_trace_exponent(pair, env)
        elif config.rank2_method == "mc":
            r = mc_exponent(pair, env, config.mc_steps, config.mc_reps, seed)
            return r, r.interval(CI_WIDTH)
        else:
            sw = enumerated_sandwich(pair, env, config.sandwich_k)
            mid = 0.5 * (sw.lower + sw.upper)
            return ExponentResult(mid, "sandwich"), (sw.lower, sw.upper)
    return r, (r.value, r.value)


def evaluate_cell(s1: float, s2: float, members: dict, config: ScanConfig, cell_key=(0, 0)) -> PhaseCell:
    env = BinaryEnvironment(s1, s2)
    labels = sorted_labels(members)
    results, intervals = {}, {}
    for k, label in enumerate(labels):
        seed = _cell_seed(config.seed, *cell_key, k)
        results[label], intervals[label] = member_exponent(members[label], env, config, seed)
    values = {k: r.value for k, r in results.items()}
    dominant, point_strong, tied = classify_cell(values)
    conservative = intervals[dominant][0] > 0 and all(
        intervals[k][1] <= 0 for k in labels if k != dominant
    )
    return PhaseCell(
        s1,
        s2,
        results,
        intervals,
        dominant,
        bool(point_strong and conservative),
        tied,
        bool(point_strong != conservative),
        {k: r.method for k, r in results.items()},
    )


def scan_grid(config: ScanConfig) -> list[PhaseCell]:
    """Evaluate every grid cell; output is sorted by ``(s1, s2)`` and independent of ``threads``."""
    members = config.members()
    assert_fair(members, config.gamma)
    axis_index = {}
    points = grid_points(config.grid, config.grid_mode)
    for s1, s2 in points:
        axis_index[(s1, s2)] = (round(s1 * config.grid * 2), round(s2 * config.grid * 2))

    def job(pt):
        return evaluate_cell(pt[0], pt[1], members, config, axis_index[pt])

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            cells = list(pool.map(job, points))
    else:
        cells = [job(pt) for pt in points]
    return sorted(cells, key=lambda c: (c.s1, c.s2))


def nearest_cell(cells: list[PhaseCell], s1: float, s2: float) -> PhaseCell:
    """Closest cell in Euclidean distance; equidistant cells resolve to the first in ``(s1, s2)`` order."""
    return min(cells, key=lambda c: ((c.s1 - s1) ** 2 + (c.s2 - s2) ** 2, c.s1, c.s2))


def fmt(x: float) -> str:
    """12 significant digits, locale independent."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


def cells_to_csv(cells: list[PhaseCell]) -> str:
    if not cells:
        return ""
    labels = sorted_labels(cells[0].exponents)
    header = ["s1", "s2"] + [f"phi_{k}" for k in labels] + ["dominant", "strong", "uncertain"]
    header += [f"method_{k}" for k in labels]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for c in cells:
        row = [fmt(c.s1), fmt(c.s2)] + [fmt(c.exponents[k].value) for k in labels]
        row += [c.dominant, str(c.strong).lower(), str(c.uncertain).lower()]
        row += [c.methods[k] for k in labels]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def separatrix_s2(s1, m_a, m_d, w1, w2, alpha, gamma=1.0) -> Optional[float]:
    """Healthy-to-harsh return probability at which the responsive and the rank-1 stochastic
    switcher have equal exponents.

    The responsive switcher is the fair partner of the stochastic one: active
    offspring ``m_a + gamma m_d`` (scaled by ``alpha/gamma`` in the harsh state)
    and the dormant death probabilities ``1 - w (1 + m_d/m_a)`` that make the
    stochastic matrices singular.  Returns ``None`` where the curve leaves
    ``(0, 1]`` or the denominator is not positive.
    """
    for name, x in (("s1", s1), ("m_a", m_a), ("m_d", m_d), ("w1", w1), ("w2", w2), ("alpha", alpha), ("gamma", gamma)):
        if not x > 0:
            raise DomainError(f"{name}={x} must be positive")
    r = m_d / m_a
    args = (w2 + w2 * r, alpha * m_a + w2 * r, m_a + w1 * r, m_a + gamma * m_d, alpha * w1 / (gamma * w2))
    if min(args) <= 0:
        raise DomainError("nonpositive logarithm argument")
    num = math.log(args[0]) - math.log(args[1])
    den = math.log(args[2]) - math.log(args[3]) - s1 * math.log(args[4])
    if den <= 0:
        return None
    s2 = s1 * num / den
    if not 0 < s2 <= 1:
        return None
    return s2
