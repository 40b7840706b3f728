import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_env, random_stochastic_pair
from seedbank.bounds import (
    SCHEMES,
    bridge_for,
    build_q,
    decompose,
    dirac_lower_bound,
    entropy_h,
    hl16_lower_bound_direct,
    hl16_mu,
    jensen_upper_bound,
    markov_entropy_lower_bound,
    norm_bounds,
    optimize_markov_lower_bound,
)
from seedbank.errors import (
    InvalidParameter,
    NotStochasticShape,
    ReducibleChain,
    SchemePreconditionFailed,
    ShapeMismatch,
)
from seedbank.exact import stochastic_rank1_exponent
from seedbank.linalg_env import BinaryEnvironment, det2, spectral_radius_2x2
from seedbank.mc import mc_bridge_exponent, mc_exponent
from seedbank.strategies import MeanMatrixPair, Responsive, Stochastic, delta_preset, nabla_preset

HALF = BinaryEnvironment(0.5, 0.5)
entries = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)
mat2 = arrays(np.float64, (2, 2), elements=entries)


def test_row_example():
    f = decompose([[1, 2], [3, 4]], "row")
    np.testing.assert_array_equal(f.left, [[1, 0], [0, 1]])
    np.testing.assert_array_equal(f.right, [[1, 2], [3, 4]])


def test_pos_det_example():
    f = decompose([[2, 1], [1, 1]], "pos-det")
    np.testing.assert_allclose(f.left, [[2, 1], [0, 1]])
    np.testing.assert_allclose(f.right, [[1, 0.5], [0, 0.5]])


@pytest.mark.parametrize(
    "m,scheme", [([[1, 2], [1, 1]], "pos-det"), ([[0, 1], [1, 1]], "pos-det"), ([[2, 1], [1, 1]], "neg-det"), ([[1, 0], [0, 0]], "neg-det")]
)
def test_scheme_preconditions(m, scheme):
    with pytest.raises(SchemePreconditionFailed):
        decompose(m, scheme)


def test_unknown_scheme():
    with pytest.raises(InvalidParameter):
        decompose(np.eye(2), "diagonal")


@given(mat2)
def test_reconstruction(m):
    scale = max(1.0, float(m.max()))
    for scheme in SCHEMES:
        try:
            f = decompose(m, scheme)
        except SchemePreconditionFailed:
            continue
        assert np.all(f.left >= 0) and np.all(f.right >= 0)
        assert np.max(np.abs(f.reconstruct() - m)) <= 1e-12 * scale * scale


def test_row_bridge_equals_matrices(rng):
    for _ in range(20):
        pair = random_stochastic_pair(rng).build()
        b = bridge_for(pair, "row")
        for i in (1, 2):
            for j in (1, 2):
                np.testing.assert_allclose(b(i, j), pair[i], atol=1e-15)


def test_delta_pos_det_bridge(golden):
    b = bridge_for(delta_preset(1 / 20).build(), "pos-det")
    for i in (1, 2):
        np.testing.assert_allclose(b(i, 1), golden["delta_posdet_A_i1"], rtol=1e-12)
    np.testing.assert_allclose(b(1, 1), [[3.3423, 0.2308], [0.1231, 0.3077]], atol=5e-5)


def test_nabla_neg_det_bridge(golden):
    pair = nabla_preset(1 / 20).build()
    b = bridge_for(pair, "neg-det")
    expected = [[np.trace(pair.m1), 1.0], [-det2(pair.m1), 0.0]]
    np.testing.assert_allclose(b(1, 1), expected, atol=1e-12)
    np.testing.assert_allclose(b(2, 1), golden["nabla_negdet_A_i1"], atol=1e-12)


def test_jensen_constant_environment(rng):
    for _ in range(20):
        m = rng.uniform(0.05, 3, (2, 2))
        m[1] /= max(1.0, m[1].sum())
        pair = MeanMatrixPair(m, m)
        b = bridge_for(pair, "row")
        value = jensen_upper_bound(b, random_env(rng), lam=np.ones((2, 2))).value
        assert value == pytest.approx(math.log(spectral_radius_2x2(m)), abs=1e-10)


@pytest.mark.parametrize("name,preset", [("delta", delta_preset), ("nabla", nabla_preset)])
def test_jensen_golden(golden, name, preset):
    b = bridge_for(preset(1 / 20).build(), "row")
    assert jensen_upper_bound(b, HALF).value == pytest.approx(golden[f"{name}_jensen_row"], abs=1e-10)


def test_jensen_rejects_nonpositive_lambda():
    b = bridge_for(delta_preset(0.1).build(), "row")
    with pytest.raises(InvalidParameter):
        jensen_upper_bound(b, HALF, lam=[[1, 1], [0, 1]])


def test_dirac_golden(golden):
    assert dirac_lower_bound(delta_preset(1 / 20).build(), HALF).value == pytest.approx(golden["delta_dirac"], abs=1e-12)
    assert dirac_lower_bound(nabla_preset(1 / 20).build(), HALF).value == pytest.approx(golden["nabla_dirac"], abs=1e-12)
    assert golden["delta_dirac"] == pytest.approx(-0.0803, abs=5e-5)
    assert golden["nabla_dirac"] == pytest.approx(-0.3435, abs=5e-5)


def test_dirac_equals_exact_on_singular_example():
    pair = Stochastic(2, 2, 0.4, 0.4, 0.2, 0.2, 1 / 20).build()
    exact = stochastic_rank1_exponent(2, 2, 0.4, 0.4, 1 / 20, HALF).value
    assert dirac_lower_bound(pair, HALF).value == pytest.approx(exact, abs=1e-12)


def test_dirac_shape_checks():
    with pytest.raises(ShapeMismatch):
        dirac_lower_bound(Stochastic(2, 2, 0.4, 0.3, 0.2, 0.2, 0.1).build(), HALF)
    with pytest.raises(NotStochasticShape):
        dirac_lower_bound(Responsive(4, 0.2, 0.2, 0.2).build(), HALF)


def test_rank_one_collapse(rng):
    for _ in range(100):
        spec = random_stochastic_pair(rng, singular=True, equal_dormant=True)
        pair = spec.build()
        e = random_env(rng)
        exact = stochastic_rank1_exponent(spec.m_a, spec.m_d, spec.w1, spec.w2, spec.alpha, e).value
        dirac = dirac_lower_bound(pair, e).value
        markov = markov_entropy_lower_bound(bridge_for(pair, "pos-det"), np.ones((2, 2, 2)), e).value
        assert dirac == pytest.approx(exact, abs=1e-10)
        assert markov == pytest.approx(exact, abs=1e-10)


def test_dirac_path_matches_markov_on_delta():
    pair = delta_preset(0.05).build()
    markov = markov_entropy_lower_bound(bridge_for(pair, "pos-det"), np.ones((2, 2, 2)), HALF).value
    assert markov == pytest.approx(dirac_lower_bound(pair, HALF).value, abs=1e-10)


def test_reducible_mu():
    mu = np.zeros((2, 2, 2))
    mu[:, :, 0] = 1.0  # type 1 stays type 1, type 2 stays type 2
    with pytest.raises(ReducibleChain):
        markov_entropy_lower_bound(bridge_for(delta_preset(0.1).build(), "row"), mu, HALF)


def test_uniform_mu_stationary():
    from seedbank.linalg_env import stationary_distribution_n

    q = build_q(np.full((2, 2, 2), 0.5), HALF)
    assert stationary_distribution_n(q) == pytest.approx([0.25] * 4, abs=1e-15)


@pytest.mark.parametrize("name,preset", [("delta", delta_preset), ("nabla", nabla_preset)])
def test_hl16_golden(golden, name, preset):
    pair = preset(1 / 20).build()
    direct = hl16_lower_bound_direct(pair, HALF).value
    via_bridge = markov_entropy_lower_bound(bridge_for(pair, "row"), hl16_mu(pair), HALF).value
    assert direct == pytest.approx(golden[f"{name}_hl16_lower"], abs=1e-10)
    assert via_bridge == pytest.approx(direct, abs=1e-10)


def test_optimizer_singleton_and_determinism():
    b = bridge_for(delta_preset(0.1).build(), "row")
    value, mu = optimize_markov_lower_bound(b, HALF, 1, seed=5)
    assert value == markov_entropy_lower_bound(b, mu, HALF).value
    assert optimize_markov_lower_bound(b, HALF, 30, seed=5)[0] == optimize_markov_lower_bound(b, HALF, 30, seed=5)[0]


def test_optimizer_dominates_included_mu():
    pair = delta_preset(0.1).build()
    b = bridge_for(pair, "row")
    value, _ = optimize_markov_lower_bound(b, HALF, 10, seed=1, include_mu=[hl16_mu(pair)])
    assert value >= markov_entropy_lower_bound(b, hl16_mu(pair), HALF).value


def test_optimizer_no_valid_sample(monkeypatch):
    from seedbank import bounds
    from seedbank.errors import NoValidSample

    def reject(*args):
        raise ReducibleChain("forced")

    b = bridge_for(delta_preset(0.1).build(), "row")
    monkeypatch.setattr(bounds, "markov_entropy_lower_bound", reject)
    with pytest.raises(NoValidSample):
        bounds.optimize_markov_lower_bound(b, HALF, 3, seed=0)


def test_optimizer_rejects_zero_samples():
    b = bridge_for(delta_preset(0.1).build(), "row")
    with pytest.raises(InvalidParameter):
        optimize_markov_lower_bound(b, HALF, 0, seed=0)


@pytest.mark.parametrize("alpha", [0.01, 0.03, 0.05])
def test_optimizer_beats_hl16_on_nabla(alpha):
    pair = nabla_preset(alpha).build()
    value, _ = optimize_markov_lower_bound(bridge_for(pair, "row"), HALF, 1000, seed=2024)
    assert value > hl16_lower_bound_direct(pair, HALF).value


def test_norm_bounds_example():
    pair = Stochastic(2, 2, 0.4, 0.4, 0.2, 0.2, 1 / 20).build()
    nb = norm_bounds(pair, HALF)
    assert nb.components["ordered_lower"] == pytest.approx(math.log(0.5), abs=1e-12)
    assert nb.components["ordered_upper"] == pytest.approx(math.log(2.4), abs=1e-12)
    exact = stochastic_rank1_exponent(2, 2, 0.4, 0.4, 1 / 20, HALF).value
    assert exact == pytest.approx(0.0912, abs=5e-5)
    assert nb.lower.value <= exact <= nb.upper.value
    assert nb.lower.value >= math.log(0.5) and nb.upper.value <= math.log(2.4)


def test_norm_bounds_constant(rng):
    for _ in range(50):
        m = rng.uniform(0.05, 3, (2, 2))
        m[1] /= max(1.0, m[1].sum())
        nb = norm_bounds(MeanMatrixPair(m, m), random_env(rng))
        assert nb.components["psi"] <= 1e-15
        assert nb.lower.value == pytest.approx(math.log(spectral_radius_2x2(m)), abs=1e-12)
        assert nb.upper.value >= nb.lower.value - 1e-12


def test_psi_nonpositive(rng):
    for _ in range(200):
        pair = random_stochastic_pair(rng).build()
        assert norm_bounds(pair, random_env(rng)).components["psi"] <= 1e-15


def test_entropy_continuity():
    assert entropy_h(0.0) == 0.0 and entropy_h(1.0) == 0.0
    assert entropy_h(1e-12) <= 1e-10 * 30
    assert entropy_h(1 - 1e-12) <= 1e-10 * 30
    assert entropy_h(0.5) == pytest.approx(math.log(2))


def test_bridge_equivalence(rng):
    for k in range(10):
        pair = random_stochastic_pair(rng).build()
        e = random_env(rng)
        direct = mc_exponent(pair, e, 100_000, 4, seed=k)
        for scheme in SCHEMES:
            try:
                b = bridge_for(pair, scheme)
            except SchemePreconditionFailed:
                continue
            via = mc_bridge_exponent(b, e, 100_000, 4, seed=k)
            assert abs(via.value - direct.value) <= 3 * math.hypot(via.stderr, direct.stderr)


def test_soundness_ordering(rng):
    for k in range(200):
        spec = random_stochastic_pair(rng, equal_dormant=bool(k % 2))
        pair = spec.build()
        e = random_env(rng)
        lowers = [norm_bounds(pair, e).lower.value, hl16_lower_bound_direct(pair, e).value]
        lowers.append(optimize_markov_lower_bound(bridge_for(pair, "row"), e, 20, seed=k)[0])
        if k % 2:
            lowers.append(dirac_lower_bound(pair, e).value)
        uppers = [norm_bounds(pair, e).upper.value, jensen_upper_bound(bridge_for(pair, "row"), e).value]
        assert max(lowers) <= min(uppers) + 1e-12
        mc = mc_exponent(pair, e, 50_000, 10, seed=k)
        assert max(lowers) <= mc.value + 3 * mc.stderr
        assert min(uppers) >= mc.value - 3 * mc.stderr
