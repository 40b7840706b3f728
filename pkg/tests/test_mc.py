import math

import numpy as np
import pytest

from conftest import random_env, random_stochastic_pair
from seedbank import mc
from seedbank.bounds import bridge_for, dirac_lower_bound, jensen_upper_bound
from seedbank.errors import InvalidParameter, KTooLarge, ZeroVector
from seedbank.exact import responsive_exponent
from seedbank.linalg_env import BinaryEnvironment, spectral_radius_2x2
from seedbank.mc import enumerated_sandwich, mc_exponent, sample_env_path
from seedbank.strategies import MeanMatrixPair, Responsive, delta_preset, nabla_preset, strong_advantage_family

EX1 = BinaryEnvironment(0.2, 0.1)
HALF = BinaryEnvironment(0.5, 0.5)


def test_path_deterministic_and_valid():
    env = BinaryEnvironment(0.3, 0.6)
    a = sample_env_path(env, 1000, seed=3)
    assert np.array_equal(a, sample_env_path(env, 1000, seed=3))
    assert not np.array_equal(a, sample_env_path(env, 1000, seed=4))
    assert set(np.unique(a)) <= {1, 2}


def test_path_always_leaves_healthy_state():
    path = sample_env_path(BinaryEnvironment(1.0, 0.5), 10_000, seed=1)
    ones = np.flatnonzero(path[:-1] == 1)
    assert np.all(path[ones + 1] == 2)


def test_path_stationary_frequency():
    path = sample_env_path(EX1, 1_000_000, seed=2024)
    assert abs(np.mean(path == 1) - 1 / 3) <= 0.005


def test_path_length_validated():
    with pytest.raises(InvalidParameter):
        sample_env_path(HALF, 0, seed=1)


def test_example_one_responsive():
    pair = Responsive(4, 0.2, 0.2, 0.2).build()
    r = mc_exponent(pair, EX1, 1_000_000, 20, seed=1)
    assert abs(r.value - 0.11) <= 3 * r.stderr + 0.005
    assert abs(r.value - responsive_exponent(4, 0.2, 0.2, 0.2, EX1).value) <= 0.01


def test_constant_environment(rng):
    for k in range(5):
        m = rng.uniform(0.1, 2, (2, 2))
        m[1] /= max(1.0, m[1].sum())
        r = mc_exponent(MeanMatrixPair(m, m), random_env(rng), 20_000, 5, seed=k)
        assert abs(r.value - math.log(spectral_radius_2x2(m))) <= 3 * r.stderr + 1e-3


def test_delta_between_bounds():
    pair = delta_preset(1 / 20).build()
    r = mc_exponent(pair, HALF, 200_000, 10, seed=9)
    lo = dirac_lower_bound(pair, HALF).value
    hi = jensen_upper_bound(bridge_for(pair, "row"), HALF).value
    assert lo <= r.value + 3 * r.stderr and r.value - 3 * r.stderr <= hi


def test_threads_do_not_change_results():
    pair = nabla_preset(0.1).build()
    a = mc_exponent(pair, HALF, 10_000, 6, seed=5, threads=1)
    b = mc_exponent(pair, HALF, 10_000, 6, seed=5, threads=3)
    assert a == b


def test_scaling_covariance(rng):
    for k in range(5):
        pair = random_stochastic_pair(rng).build()
        env = random_env(rng)
        c = float(rng.uniform(0.1, 10))
        base = mc_exponent(pair, env, 10_000, 3, seed=k)
        scaled = mc_exponent(pair.scaled(c), env, 10_000, 3, seed=k)
        assert abs(scaled.value - math.log(c) - base.value) <= 1e-12


def test_zero_vector_early_raises():
    zero = np.zeros((2, 2))
    with pytest.raises(ZeroVector):
        mc_exponent(MeanMatrixPair(zero, zero), HALF, 100, 1, seed=0)


def test_zero_vector_late_is_minus_inf():
    pair = MeanMatrixPair(np.eye(2) * 0.5, np.zeros((2, 2)))
    env = BinaryEnvironment(0.01, 0.99)
    r = mc_exponent(pair, env, 1000, 2, seed=1)
    assert r.value == -math.inf


def test_mc_validation():
    pair = delta_preset(0.1).build()
    with pytest.raises(InvalidParameter):
        mc_exponent(pair, HALF, 50, 1, seed=0)
    with pytest.raises(InvalidParameter):
        mc_exponent(pair, HALF, 1000, 0, seed=0)


def test_sandwich_single_factor(rng):
    pair = random_stochastic_pair(rng).build()
    env = random_env(rng)
    r = enumerated_sandwich(pair, env, 1)
    pi = env.stationary
    assert r.lower == pytest.approx(sum(p * math.log(m.sum(axis=1).min()) for p, m in zip(pi, (pair.m1, pair.m2))))
    assert r.upper == pytest.approx(sum(p * math.log(m.sum()) for p, m in zip(pi, (pair.m1, pair.m2))))


def test_sandwich_matches_brute_force(golden):
    r = enumerated_sandwich(Responsive(4, 0.2, 0.2, 0.2).build(), EX1, 16)
    assert r.lower == pytest.approx(golden["responsive_sandwich_k16"]["lower"], abs=1e-10)
    assert r.upper == pytest.approx(golden["responsive_sandwich_k16"]["upper"], abs=1e-10)


@pytest.mark.parametrize("k", [17, 19])
def test_sandwich_chunking(monkeypatch, k):
    pair = nabla_preset(0.1).build()
    chunked = enumerated_sandwich(pair, HALF, k, "permanent")
    monkeypatch.setattr(mc, "_CHUNK_K", 22)
    whole = enumerated_sandwich(pair, HALF, k, "permanent")
    assert chunked.lower == pytest.approx(whole.lower, abs=1e-12)
    assert chunked.upper == pytest.approx(whole.upper, abs=1e-12)


def test_sandwich_limits():
    pair = delta_preset(0.1).build()
    with pytest.raises(KTooLarge):
        enumerated_sandwich(pair, HALF, 23)
    with pytest.raises(InvalidParameter):
        enumerated_sandwich(pair, HALF, 0)
    with pytest.raises(InvalidParameter):
        enumerated_sandwich(pair, HALF, 3, "trace")


@pytest.mark.parametrize("f", mc.SUPERMULTIPLICATIVE)
def test_sandwich_doubling_monotone(rng, f):
    for _ in range(10):
        pair = random_stochastic_pair(rng).build()
        env = random_env(rng)
        rs = [enumerated_sandwich(pair, env, k, f) for k in (1, 2, 4, 8)]
        for a, b in zip(rs, rs[1:]):
            assert a.lower <= b.lower + 1e-12
            assert b.upper <= a.upper + 1e-12
        assert all(r.lower <= r.upper for r in rs)


def test_sandwich_stepwise_monotonicity_fails_for_periodic_pair():
    # products alternate between diagonal and anti-diagonal, so odd k are penalised
    m = np.array([[0.0, 1.0], [0.01, 0.0]])
    rs = [enumerated_sandwich(MeanMatrixPair(m, m), HALF, k) for k in range(1, 7)]
    assert rs[2].lower < rs[1].lower and rs[2].upper > rs[1].upper
    for r in rs[1::2]:
        assert r.lower == pytest.approx(math.log(0.1), abs=1e-12)
    assert all(r.lower <= math.log(0.1) + 1e-12 <= r.upper + 1e-12 for r in rs)


def test_sandwich_monotone_on_example_pairs():
    fam = strong_advantage_family(1 / 20)
    pairs = [fam["res"].build(), fam["sto"].build(), delta_preset(0.05).build(), nabla_preset(0.05).build()]
    for pair in pairs:
        for env in (EX1, HALF):
            rs = [enumerated_sandwich(pair, env, k) for k in range(1, 13)]
            for a, b in zip(rs, rs[1:]):
                assert a.lower <= b.lower + 1e-12 and b.upper <= a.upper + 1e-12


def test_sandwich_brackets_mc(rng):
    for k in range(20):
        pair = random_stochastic_pair(rng).build()
        env = random_env(rng)
        sw = enumerated_sandwich(pair, env, 14)
        r = mc_exponent(pair, env, 50_000, 4, seed=k)
        assert sw.lower - 0.01 <= r.value <= sw.upper + 0.01
