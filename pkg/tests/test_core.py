"""Unit tests for the SOAA update rule and its building-block ops."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

import soaa
from soaa import ops
from soaa.core import SOAA, ParamGroup, SoaaConfig
from soaa.errors import ConfigError, NumericsError, PreconditionError, ShapeError


# -- construction and config ------------------------------------------------

def test_init_defaults():
    opt = SOAA(np.zeros(3))
    st = opt.state
    assert st.t == 0
    assert st.dt == 1.0
    assert st.pr == 0.0
    assert st.l_avg == 0.0
    assert_array_equal(st.m[0], np.zeros(3))
    assert_array_equal(st.s[0], np.zeros(3))


def test_init_two_groups():
    opt = SOAA([np.zeros(2), np.zeros(5)])
    assert [v.shape for v in opt.state.m] == [(2,), (5,)]
    assert [v.shape for v in opt.state.s] == [(2,), (5,)]


@pytest.mark.parametrize("kwargs", [
    {"gamma": 1.2},
    {"gamma": 0.0},
    {"gamma": 1.0},
    {"alpha": 0.0},
    {"alpha": -1e-3},
    {"beta1": 1.0},
    {"beta2": -0.1},
    {"epsilon": 0.0},
    {"weight_decay": -0.01},
    {"total_steps": 0},
])
def test_config_bounds(kwargs):
    with pytest.raises(ConfigError):
        SoaaConfig(**kwargs)


def test_config_coerces_numeric_strings():
    cfg = SoaaConfig(alpha="0.01", total_steps="50")
    assert cfg.alpha == 0.01
    assert cfg.total_steps == 50
    with pytest.raises(ConfigError):
        SoaaConfig(alpha="fast")


def test_config_object_and_kwargs_conflict():
    with pytest.raises(ConfigError):
        SOAA(np.zeros(1), SoaaConfig(), alpha=0.1)


def test_group_shape_validation():
    with pytest.raises(ShapeError):
        SOAA(np.zeros((2, 2)))
    with pytest.raises(ShapeError):
        SOAA(np.zeros(0))
    with pytest.raises(ShapeError):
        SOAA([])
    with pytest.raises(ConfigError):
        SOAA(ParamGroup(np.zeros(2), alpha=0.0))
    with pytest.raises(ConfigError):
        SOAA(ParamGroup(np.zeros(2), weight_decay=-1.0))


def test_params_updated_in_place():
    theta = np.zeros(2)
    opt = SOAA(theta)
    opt.step(np.ones(2), loss=1.0)
    assert opt.groups[0].theta is theta
    assert theta[0] != 0.0


# -- building-block ops -----------------------------------------------------

def test_update_moments_hand_values():
    m, s = ops.update_moments(np.zeros(1), np.zeros(1), np.array([1.0]), 0.9, 0.999)
    assert_allclose(m, [0.1], rtol=0, atol=1e-15)
    assert_allclose(s, [0.001], rtol=0, atol=1e-15)


def test_update_moments_sign_insensitive_s():
    m, s = ops.update_moments(np.zeros(1), np.zeros(1), np.array([-2.0]), 0.9, 0.999)
    assert_allclose(m, [-0.2], rtol=0, atol=1e-15)
    assert_allclose(s, [0.004], rtol=0, atol=1e-15)


def test_update_moments_zero_gradient():
    m0, s0 = np.array([0.5]), np.array([0.25])
    m, s = ops.update_moments(m0, s0, np.zeros(1), 0.9, 0.999)
    assert_allclose(m, 0.9 * m0)
    assert_allclose(s, 0.999 * s0)


def test_bias_correct_t1():
    m_hat, s_hat = ops.bias_correct(np.array([0.1]), np.array([0.001]), 1, 0.9, 0.999)
    assert_allclose(m_hat, [1.0], rtol=0, atol=1e-9)
    assert_allclose(s_hat, [1.0], rtol=0, atol=1e-9)
    # When m was built by the EMA itself, the (1 - beta) factors cancel
    # exactly at t=1.
    m, s = ops.update_moments(np.zeros(1), np.zeros(1), np.ones(1), 0.9, 0.999)
    m_hat, s_hat = ops.bias_correct(m, s, 1, 0.9, 0.999)
    assert m_hat[0] == 1.0
    assert s_hat[0] == 1.0


def test_bias_correct_asymptotic():
    m, s = np.array([0.3]), np.array([0.7])
    t = 30000  # beta1^t and beta2^t both far below 1e-12
    m_hat, s_hat = ops.bias_correct(m, s, t, 0.9, 0.999)
    assert_allclose(m_hat, m, rtol=1e-9)
    assert_allclose(s_hat, s, rtol=1e-9)


def test_bias_correct_requires_positive_t():
    with pytest.raises(PreconditionError):
        ops.bias_correct(np.zeros(1), np.zeros(1), 0, 0.9, 0.999)


def test_fisher_hand_value():
    f = ops.fisher_approx(np.array([1.0]), np.array([1.0]), 1e-8)
    assert_allclose(f, [2.0], rtol=0, atol=1e-7)


def test_fisher_zero_momentum_is_identity():
    f = ops.fisher_approx(np.array([0.0, 0.0]), np.array([4.0, 9.0]), 1e-8)
    assert_array_equal(f, [4.0, 9.0])


def test_fisher_zero_curvature_stays_zero():
    m_hat = np.array([1.0, 1.0])
    s_hat = np.zeros(2)
    c = ops.fisher_coefficient(m_hat, s_hat, 1e-8)
    assert_allclose(c, 1.0 + 2.0 / 2e-8, rtol=1e-12)
    assert_array_equal(ops.fisher_approx(m_hat, s_hat, 1e-8), [0.0, 0.0])


def test_trust_region_scale_cases():
    assert_array_equal(ops.trust_region_scale(1.0, np.array([2.0]), np.array([1.0])), [2.0])
    assert_array_equal(ops.trust_region_scale(1.0, np.array([0.0]), np.array([0.0])), [0.0])
    # sqrt branch dominates: max(0.5*2, sqrt(4)) = 2
    assert_array_equal(ops.trust_region_scale(0.5, np.array([2.0]), np.array([4.0])), [2.0])


def test_adjusted_gradient_cases():
    g = ops.adjusted_gradient(np.array([1.0]), 1.0, np.array([2.0]), 1e-8)
    assert_allclose(g, [0.5], rtol=0, atol=1e-8)
    assert_array_equal(ops.adjusted_gradient(np.zeros(3), 1.0, np.ones(3), 1e-8), np.zeros(3))
    # zero trust scale: epsilon alone bounds the step
    g = ops.adjusted_gradient(np.array([1.0]), 1.0, np.array([0.0]), 1e-8)
    assert_allclose(g, [1e8], rtol=1e-12)


def test_seq_sum_is_left_to_right():
    x = np.array([1e16, 1.0, -1e16, 1.0])
    total = 0.0
    for v in x:
        total += v
    assert ops.seq_sum(x) == total
    assert ops.seq_sum(np.array([])) == 0.0


def test_dt_bounds_window():
    lo, hi = ops.dt_bounds(1, 100, 0.1)
    assert (lo, hi) == (1.0, 2.0)
    lo, hi = ops.dt_bounds(101, 100, 0.1)
    assert_allclose([lo, hi], [0.9, 1.1], rtol=0, atol=1e-15)
    # exponent clamps at 1 beyond the horizon
    assert ops.dt_bounds(5000, 100, 0.1) == ops.dt_bounds(101, 100, 0.1)


# -- full-step behavior -----------------------------------------------------

def test_step_hand_trace():
    theta = np.zeros(1)
    opt = SOAA(theta)
    rec = opt.step_trace(np.array([1.0]), loss=1.0)
    assert rec.m_hat[0][0] == pytest.approx(1.0, abs=1e-9)
    assert rec.s_hat[0][0] == pytest.approx(1.0, abs=1e-9)
    assert rec.fisher[0][0] == pytest.approx(2.0, abs=1e-7)
    assert rec.trust[0][0] == pytest.approx(2.0, abs=1e-7)
    assert rec.g_adj[0][0] == pytest.approx(0.5, abs=1e-9)
    assert theta[0] == pytest.approx(-5e-4, abs=1e-12)
    # l_hat equals the first loss exactly, so the ratio is 0 and dt clamps
    # to the t=1 lower bound (1-gamma)^0 = 1.
    assert rec.ratio == 0.0
    assert opt.state.dt == 1.0
    assert opt.state.pr == pytest.approx(3.75e-4, abs=1e-9)


def test_step_fixed_point():
    theta = np.array([0.7, -1.3])
    before = theta.copy()
    opt = SOAA(theta)
    opt.step(np.zeros(2))
    assert_array_equal(theta, before)
    assert opt.state.dt == 1.0
    assert opt.state.t == 1


def test_step_pure_decay():
    theta = np.array([1.0])
    opt = SOAA(theta, alpha=0.1, weight_decay=0.01)
    opt.step(np.zeros(1))
    assert theta[0] == 0.999


def test_first_step_dt_is_one():
    rng = np.random.default_rng(11)
    for _ in range(100):
        opt = SOAA(rng.standard_normal(4))
        opt.step(rng.standard_normal(4), loss=float(rng.uniform(-100.0, 100.0)))
        assert opt.state.dt == 1.0


def test_loss_absent_step_freezes_trust_state():
    theta = np.zeros(3)
    opt = SOAA(theta)
    opt.step(np.ones(3), loss=2.0)
    frozen = (opt.state.dt, opt.state.l_avg, opt.state.pr)
    opt.step(np.ones(3))
    assert (opt.state.dt, opt.state.l_avg, opt.state.pr) == frozen
    assert opt.state.t == 2
    assert opt.state.m[0].any()


def test_clamp_invariant_short_fuzz():
    rng = np.random.default_rng(3)
    opt = SOAA(rng.standard_normal(3), gamma=0.3, total_steps=50)
    cfg = opt.config
    for _ in range(500):
        with_loss = rng.random() < 0.8
        loss = float(rng.standard_normal() * 3) if with_loss else None
        opt.step(rng.standard_normal(3), loss=loss)
        if with_loss:
            lo, hi = ops.dt_bounds(opt.state.t, cfg.total_steps, cfg.gamma)
            assert lo <= opt.state.dt <= hi


def test_state_invariants_random_run():
    rng = np.random.default_rng(7)
    theta = rng.standard_normal(6)
    opt = SOAA(theta)
    for _ in range(50):
        rec = opt.step_trace(rng.standard_normal(6) * 10, loss=float(rng.standard_normal()))
        assert (opt.state.s[0] >= 0).all()
        assert np.isfinite(opt.state.m[0]).all()
        assert (rec.trust[0] >= np.sqrt(rec.s_hat[0])).all()


def test_step_and_trace_are_equivalent():
    rng = np.random.default_rng(19)
    for _ in range(25):
        theta_a = rng.standard_normal(5)
        theta_b = theta_a.copy()
        kwargs = dict(
            alpha=float(10 ** rng.uniform(-4, -1)),
            beta1=float(rng.uniform(0, 0.99)),
            beta2=float(rng.uniform(0.9, 0.9999)),
            gamma=float(rng.uniform(0.01, 0.5)),
            weight_decay=float(rng.choice([0.0, 0.05])),
            total_steps=int(rng.integers(1, 200)),
        )
        fast = SOAA(theta_a, **kwargs)
        slow = SOAA(theta_b, **kwargs)
        for _ in range(5):
            g = rng.standard_normal(5) * 10 ** rng.uniform(-2, 2)
            loss = float(rng.standard_normal()) if rng.random() < 0.8 else None
            fast.step(g, loss=loss)
            slow.step_trace(g, loss=loss)
            assert_array_equal(theta_a, theta_b)
            assert fast.state.dt == slow.state.dt
            assert fast.state.pr == slow.state.pr
            assert fast.state.l_avg == slow.state.l_avg
            assert_array_equal(fast.state.m[0], slow.state.m[0])
            assert_array_equal(fast.state.s[0], slow.state.s[0])


def test_multi_group_uses_per_group_fisher_sum():
    rng = np.random.default_rng(23)
    g1, g2 = rng.standard_normal(2), rng.standard_normal(5)
    opt = SOAA([np.zeros(2), np.zeros(5)])
    rec = opt.step_trace([g1, g2], loss=1.0)
    for k, g in enumerate((g1, g2)):
        m, s = ops.update_moments(np.zeros(g.size), np.zeros(g.size), g, 0.9, 0.999)
        m_hat, s_hat = ops.bias_correct(m, s, 1, 0.9, 0.999)
        assert rec.fisher_c[k] == ops.fisher_coefficient(m_hat, s_hat, 1e-8)
    assert rec.fisher_c[0] != rec.fisher_c[1]


def test_per_group_overrides_apply():
    theta1, theta2 = np.array([1.0]), np.array([1.0])
    opt = SOAA(
        [ParamGroup(theta1, alpha=0.1, weight_decay=0.01), ParamGroup(theta2)],
        alpha=1e-3,
    )
    opt.step([np.zeros(1), np.zeros(1)])
    assert theta1[0] == 0.999  # decayed with the group's alpha and lambda
    assert theta2[0] == 1.0    # global weight_decay stays 0


def test_gradient_validation():
    opt = SOAA(np.zeros(3))
    with pytest.raises(ShapeError):
        opt.step(np.zeros(4))
    with pytest.raises(ShapeError):
        opt.step([np.zeros(3), np.zeros(3)])
    with pytest.raises(NumericsError):
        opt.step(np.array([1.0, np.nan, 0.0]))
    with pytest.raises(NumericsError):
        opt.step(np.zeros(3), loss=float("inf"))


def test_total_steps_overrun_is_allowed():
    opt = SOAA(np.zeros(1), total_steps=3, gamma=0.2)
    for _ in range(10):
        opt.step(np.ones(1), loss=1.0)
    lo, hi = ops.dt_bounds(opt.state.t, 3, 0.2)
    assert_allclose([lo, hi], [0.8, 1.2], rtol=0, atol=1e-15)
    assert lo <= opt.state.dt <= hi
