import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from paretoprune.errors import ConfigurationError
from paretoprune.net import NetworkSpec
from paretoprune.objectives import RegularizerKind, omega
from paretoprune.optim import SGD
from paretoprune.pruning import Hook, Pruner, PruningPolicy, Strategy, hook_points, nonzero_per_layer, prune

FLAT = NetworkSpec((3, 1), include_bias=False)  # three weights, one layer


def policy(tau=1e-3, strategy="batchwise", **kw):
    return PruningPolicy(strategy, tau, **kw)


class TestPrune:
    def test_boundary_rule(self, backend):
        out, rep = prune(np.array([0.0005, -0.002, 0.001]), policy(), FLAT)
        np.testing.assert_array_equal(out, [0.0, -0.002, 0.001])
        assert rep.pruned_count == 1

    def test_all_zero(self, backend):
        out, rep = prune(np.zeros(3), policy(), FLAT)
        np.testing.assert_array_equal(out, 0.0)
        assert rep.pruned_count == 0

    def test_pure_variant_copies(self):
        w = np.array([1e-4, 1.0, -1e-4])
        prune(w, policy(), FLAT)
        assert w[0] == 1e-4

    def test_biases_untouched(self):
        spec = NetworkSpec((2, 2))
        w = np.full(spec.n_params, 1e-5)
        out, rep = prune(w, policy(), spec)
        np.testing.assert_array_equal(out[:4], 0.0)
        np.testing.assert_array_equal(out[4:], 1e-5)
        assert rep.nonzero_per_layer == (0,)

    def test_layer_subset(self):
        spec = NetworkSpec((2, 2, 2), include_bias=False)
        out, _ = prune(np.full(8, 1e-5), policy(layers=[1]), spec)
        np.testing.assert_array_equal(out, [1e-5] * 4 + [0.0] * 4)

    def test_uniform_measure(self, backend):
        # fraction of U(-0.01, 0.01) mass inside (-tau, tau) is tau / 0.01
        n = 1_000_000
        w = np.random.default_rng(0).uniform(-0.01, 0.01, n)
        spec = NetworkSpec((n, 1), include_bias=False)
        out, rep = prune(w, policy(), spec)
        frac = rep.pruned_count / n
        assert abs(frac - 0.1) < 5 * np.sqrt(0.1 * 0.9 / n)
        assert np.count_nonzero(out == 0) == rep.pruned_count

    def test_off_rejected(self):
        with pytest.raises(ConfigurationError):
            prune(np.zeros(3), policy(strategy="off"), FLAT)

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.1])
    def test_tau_range(self, tau):
        with pytest.raises(ConfigurationError):
            policy(tau=tau)

    def test_layer_out_of_range(self):
        with pytest.raises(ConfigurationError):
            Pruner(FLAT, policy(layers=[2]))


vectors = arrays(np.float64, 40, elements=st.floats(-0.01, 0.01))


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(vectors, st.floats(1e-5, 0.009))
    def test_idempotent(self, w, tau):
        spec = NetworkSpec((40, 1), include_bias=False)
        once, _ = prune(w, policy(tau), spec)
        twice, rep = prune(once, policy(tau), spec)
        np.testing.assert_array_equal(once, twice)
        assert rep.pruned_count == 0

    @settings(max_examples=60, deadline=None)
    @given(vectors, st.floats(1e-5, 0.005), st.floats(1e-6, 0.004))
    def test_threshold_monotone(self, w, tau, extra):
        spec = NetworkSpec((40, 1), include_bias=False)
        small, _ = prune(w, policy(tau), spec)
        large, _ = prune(w, policy(tau + extra), spec)
        assert np.all((small == 0) <= (large == 0))

    @settings(max_examples=60, deadline=None)
    @given(vectors, st.floats(1e-5, 0.009))
    def test_l0_not_increasing(self, w, tau):
        spec = NetworkSpec((40, 1), include_bias=False)
        out, _ = prune(w, policy(tau), spec)
        assert omega(RegularizerKind.L0, out) <= omega(RegularizerKind.L0, w)


class TestRegrowth:
    def test_crafted_step_regrows(self, backend):
        spec = NetworkSpec((3, 1), include_bias=False)
        pruner = Pruner(spec, policy())
        w = np.array([0.0004, 0.5, -0.7])
        rep = pruner.apply(w)
        assert w[0] == 0.0 and rep.pruned_count == 1

        # one gradient step moves the pruned weight well above tau
        SGD(3).step(w, np.array([-0.05, 0.0, 0.0]), 0.1)
        assert abs(w[0]) > 1e-3
        rep = pruner.apply(w)
        assert w[0] == pytest.approx(0.005)
        assert rep.regrown_since_last == 1 and rep.pruned_count == 0

    def test_nonzero_per_layer(self):
        spec = NetworkSpec((2, 2, 1))
        w = np.zeros(spec.n_params)
        w[0] = 1.0
        w[6] = 2.0  # first weight of layer 2
        assert nonzero_per_layer(spec, w) == (1, 1)


class TestHooks:
    def test_batchwise(self):
        assert hook_points(policy()) == {Hook.AFTER_INIT, Hook.AFTER_BATCH, Hook.AFTER_EPOCH, Hook.AFTER_TRAINING}

    def test_epochwise(self):
        assert hook_points(policy(strategy="epochwise")) == {Hook.AFTER_INIT, Hook.AFTER_EPOCH, Hook.AFTER_TRAINING}

    def test_after_training(self):
        assert hook_points(policy(strategy="after_training")) == {Hook.AFTER_INIT, Hook.AFTER_TRAINING}

    def test_off(self):
        assert hook_points(policy(strategy="off", prune_at_init=False)) == set()
        assert hook_points(policy(strategy="off")) == {Hook.AFTER_INIT}

    def test_no_init_prune(self):
        assert Hook.AFTER_INIT not in hook_points(policy(prune_at_init=False))

    def test_strategy_from_string(self):
        assert policy(strategy="epochwise").strategy is Strategy.EPOCHWISE
