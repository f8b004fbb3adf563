"""Integrator and ensemble contracts: tracking, determinism, variance oracles."""

import math

import numpy as np
import pytest

from ewscale import (ModelSpec, NoiseSpec, RngStream, SimConfig,
                     attracting_branch, detect_jump, euler_maruyama,
                     fold_point_stommel, integrate_path, run_ensemble,
                     solve_lyapunov_ode, v_infinity_white)
from ewscale.errors import ParameterError


def _stommel_cfg(**kw):
    model = kw.pop("model", ModelSpec.stommel_cessi(sigma=kw.pop("sigma", 0.01)))
    defaults = dict(model=model, noise=NoiseSpec.white(),
                    x0=attracting_branch(model, 1.4), y0=1.4, dt=1e-3,
                    t_end=45.0, n_paths=1, master_seed=77, record_stride=10)
    defaults.update(kw)
    return SimConfig(**defaults)


def test_sim_config_validation():
    with pytest.raises(ParameterError):
        _stommel_cfg(dt=1e-3, t_end=0.0105)  # not an integer step count
    with pytest.raises(ParameterError):
        _stommel_cfg(n_paths=0)
    with pytest.raises(ParameterError):
        _stommel_cfg(dt=-1e-3)
    assert _stommel_cfg().n_steps == 45000


# ---------------------------------------------------------------------------
# deterministic (sigma = 0) manifold tracking, with stiff-ODE oracles
# ---------------------------------------------------------------------------

def test_deterministic_stommel_tracks_manifold():
    """sigma = 0: the path stays within 0.05 of the attracting branch until
    y - y* < 0.05; oracle: a stiff ODE solve of the deterministic system."""
    from scipy.integrate import solve_ivp

    model = ModelSpec.stommel_cessi(sigma=0.0)
    cfg = _stommel_cfg(model=model)
    rec = integrate_path(cfg, RngStream(1))
    y_star = fold_point_stommel(7.5).y_star

    keep = rec.y - y_star > 0.05
    branch = np.array([attracting_branch(model, y) for y in rec.y[keep]])
    assert np.max(np.abs(rec.x[keep] - branch)) < 0.05

    sol = solve_ivp(
        lambda t, s: [s[1] - s[0] * (1 + 7.5 * (1 - s[0]) ** 2), -0.01],
        (0.0, 40.0), [cfg.x0, cfg.y0], method="Radau",
        t_eval=rec.t[rec.t <= 40.0], rtol=1e-10, atol=1e-12)
    n = len(sol.t)
    assert np.max(np.abs(rec.x[:n] - sol.y[0])) < 2e-3  # Euler O(dt) drift error


def test_deterministic_fold_normal_form_tracks():
    """sigma = 0 fold from (-1, -1): x follows -sqrt(-y) with O(eps) error
    away from the fold; oracle: accurate ODE solve."""
    from scipy.integrate import solve_ivp

    model = ModelSpec.fold(sigma=0.0)  # slow_rate = +eps
    cfg = SimConfig(model=model, noise=NoiseSpec.white(), x0=-1.0, y0=-1.0,
                    dt=1e-3, t_end=80.0, n_paths=1, master_seed=5,
                    record_stride=100)
    rec = integrate_path(cfg, RngStream(5))
    away = rec.y < -0.1
    track = np.abs(rec.x[away] - (-np.sqrt(-rec.y[away])))
    assert np.max(track[10:]) < 10 * model.epsilon  # after the initial layer

    sol = solve_ivp(lambda t, s: [s[0] ** 2 + s[1], 0.01], (0, 80.0),
                    [-1.0, -1.0], method="Radau", t_eval=rec.t,
                    rtol=1e-10, atol=1e-12)
    ok = rec.y < -0.05
    assert np.max(np.abs(rec.x[ok] - sol.y[0][ok])) < 5e-3


def test_slow_variable_exact():
    """y(t) - y0 - slow_rate * t == 0 exactly at every recorded step."""
    cfg = _stommel_cfg(t_end=2.0)
    rec = integrate_path(cfg, RngStream(3))
    assert np.array_equal(rec.y, cfg.y0 + cfg.model.slow_rate * rec.t)


# ---------------------------------------------------------------------------
# determinism contracts
# ---------------------------------------------------------------------------

def test_worker_count_invariance():
    cfg = _stommel_cfg(t_end=2.0, n_paths=300, keep_paths=2)
    a = run_ensemble(cfg, n_workers=1)
    b = run_ensemble(cfg, n_workers=4)
    assert np.array_equal(a.variance, b.variance)
    assert np.array_equal(a.n_survivors, b.n_survivors)
    assert np.array_equal(a.paths[1].x, b.paths[1].x)


def test_single_path_matches_ensemble_member():
    cfg = _stommel_cfg(t_end=2.0, n_paths=64, keep_paths=64,
                       noise=NoiseSpec.fbm(0.9))
    stats = run_ensemble(cfg)
    solo = integrate_path(cfg, RngStream(cfg.master_seed, 17))
    assert np.array_equal(stats.paths[17].x, solo.x)


def test_prefix_property_m_to_2m():
    """First M paths of a 2M run reproduce the M-run statistics exactly."""
    small = _stommel_cfg(t_end=1.0, n_paths=60, keep_paths=60)
    big = _stommel_cfg(t_end=1.0, n_paths=120, keep_paths=120)
    s, b = run_ensemble(small), run_ensemble(big)
    xs = np.stack([p.x for p in s.paths])
    xb = np.stack([p.x for p in b.paths[:60]])
    assert np.array_equal(xs, xb)
    # recompute the small-run variance from the big run's first 60 paths
    # with the pipeline's own estimator: bitwise identical
    from ewscale.simulate import _masked_variance

    alive = np.ones(xb.shape, dtype=bool)
    var = _masked_variance(xb, alive, alive.sum(axis=0))
    assert np.array_equal(var, s.variance)


def test_coloured_and_rosenblatt_determinism():
    for noise in (NoiseSpec.coloured(0.05), NoiseSpec.rosenblatt(0.9)):
        cfg = _stommel_cfg(t_end=1.0, dt=1e-2, record_stride=2, n_paths=40,
                           noise=noise)
        a, b = run_ensemble(cfg), run_ensemble(cfg)
        assert np.array_equal(a.variance, b.variance)


# ---------------------------------------------------------------------------
# ensemble variance against theory
# ---------------------------------------------------------------------------

def test_zero_sigma_zero_variance():
    cfg = _stommel_cfg(model=ModelSpec.stommel_cessi(sigma=0.0),
                       t_end=2.0, n_paths=8)
    stats = run_ensemble(cfg)
    assert np.all(stats.variance == 0.0)
    assert np.all(stats.n_survivors == 8)


def test_frozen_y_white_matches_stationary_variance():
    """Pitchfork frozen at y = -1 (a = -1): long-run ensemble variance
    within 5% of sigma^2/2; oracle = the closed-form stationary value."""
    model = ModelSpec.pitchfork(sigma=0.01, slow_rate=0.0)
    cfg = SimConfig(model=model, noise=NoiseSpec.white(), x0=0.0, y0=-1.0,
                    dt=1e-3, t_end=16.0, n_paths=1000, master_seed=42,
                    record_stride=200)
    stats = run_ensemble(cfg)
    late = stats.t > 8.0
    got = stats.variance[late].mean()
    want = v_infinity_white(0.01, -1.0)
    assert abs(got - want) < 0.05 * want


def test_variance_matches_lyapunov_ode_moving_y():
    """Moving-y white-noise sweep: ensemble variance within 3 SE of the
    scalar Lyapunov ODE at >= 95% of recorded points (burn-in excluded)."""
    model = ModelSpec.pitchfork(sigma=0.01)  # slow_rate = +0.01
    cfg = SimConfig(model=model, noise=NoiseSpec.white(), x0=0.0, y0=-0.5,
                    dt=1e-3, t_end=40.0, n_paths=1500, master_seed=21,
                    record_stride=40)
    stats = run_ensemble(cfg)
    y, v = solve_lyapunov_ode(lambda yy: yy, 0.01, 0.01, -0.5, 0.0, -0.1, 1e-4)
    sel = stats.y <= -0.1 + 1e-12
    pred = np.interp(stats.y[sel], y, v)
    got = stats.variance[sel]
    m = cfg.n_paths
    se = got * math.sqrt(2.0 / (m - 1))
    frac = np.mean(np.abs(got - pred) <= 3 * se)
    assert frac >= 0.95, f"only {frac:.2%} of points within 3 SE"


def test_strong_order_one_for_additive_noise():
    """Halving dt halves the strong error of Euler-Maruyama against the
    exactly coupled OU solution (linear drift a = -1, frozen y)."""
    rng = np.random.default_rng(2718)
    t_end, m = 1.0, 1000
    errs = {}
    for dt in (0.02, 0.01):
        n = int(round(t_end / dt))
        dw = rng.standard_normal((m, n)) * math.sqrt(dt)
        # exact solution shares dW and adds the independent bridge residual
        beta = (1 - math.exp(-dt)) / dt
        res_var = (1 - math.exp(-2 * dt)) / 2 - beta**2 * dt
        eta = rng.standard_normal((m, n)) * math.sqrt(res_var)
        x_em = euler_maruyama(lambda x, y: -x, np.ones(m), dt, dw)
        x_ex = np.ones(m)
        phi = math.exp(-dt)
        for k in range(n):
            x_ex = phi * x_ex + beta * dw[:, k] + eta[:, k]
        errs[dt] = np.mean(np.abs(x_em[:, -1] - x_ex))
    ratio = errs[0.02] / errs[0.01]
    assert 1.6 < ratio < 2.6, f"strong-error ratio {ratio}"


# ---------------------------------------------------------------------------
# jump detection
# ---------------------------------------------------------------------------

def test_detect_jump_absent_far_from_fold():
    cfg = _stommel_cfg(model=ModelSpec.stommel_cessi(sigma=0.0), t_end=5.0)
    rec = integrate_path(cfg, RngStream(2))
    assert rec.jump_time is None
    assert detect_jump(rec, cfg.model, 0.3) is None


def test_detect_jump_at_fold_crossing():
    """A deterministic path run through the fold jumps within one recorded
    step of the y = y* crossing; oracle = the manifold-distance scan."""
    model = ModelSpec.stommel_cessi(sigma=0.0)
    cfg = _stommel_cfg(model=model, record_stride=1)
    rec = integrate_path(cfg, RngStream(2))
    y_star = fold_point_stommel(7.5).y_star
    t_cross = (1.4 - y_star) / 0.01
    assert rec.jump_time is not None
    assert abs(rec.jump_time - t_cross) <= cfg.dt + 1e-12


def test_detect_jump_delta_zero_degenerate():
    cfg = _stommel_cfg(t_end=1.0)
    rec = integrate_path(cfg, RngStream(4))
    assert detect_jump(rec, cfg.model, 0.0) == 0.0
    with pytest.raises(ParameterError):
        detect_jump(rec, cfg.model, -0.1)


def test_blowup_terminates_and_records():
    """Past-fold start on the fold normal form explodes in finite time; the
    path is cut at the blow-up bound and its jump time recorded."""
    model = ModelSpec.fold(sigma=0.0, slow_rate=0.0)
    cfg = SimConfig(model=model, noise=NoiseSpec.white(), x0=1.0, y0=0.25,
                    dt=1e-3, t_end=5.0, n_paths=1, master_seed=9,
                    record_stride=1)
    rec = integrate_path(cfg, RngStream(9))
    assert rec.jump_time is not None
    assert rec.jump_time < 2.0
    assert not np.isfinite(rec.x[-1])
    stats = run_ensemble(cfg)
    assert stats.n_survivors[-1] == 0
    assert np.isnan(stats.variance[-1])  # absent, not zero


# ---------------------------------------------------------------------------
# qualitative variance behaviour per noise class
# ---------------------------------------------------------------------------

def _late_window_variances(noise, m=400, seed=1001):
    cfg = _stommel_cfg(noise=noise, n_paths=m, master_seed=seed,
                       record_stride=50)
    stats = run_ensemble(cfg)
    y_star = fold_point_stommel(7.5).y_star
    d = stats.y - y_star
    sel = (d > 0.03) & (stats.t > 1.0) & np.isfinite(stats.variance)
    return d[sel], stats.variance[sel]


@pytest.mark.parametrize("noise", [NoiseSpec.white(), NoiseSpec.fbm(0.9)])
def test_monotone_variance_growth_toward_fold(noise):
    """After burn-in and before jumps, binned variance increases as the
    distance to the fold shrinks (white and long-memory forcing)."""
    d, v = _late_window_variances(noise)
    edges = np.geomspace(d.max(), d.min() * 0.999, 7)
    means = [v[(d <= edges[i]) & (d >= edges[i + 1])].mean() for i in range(6)]
    assert all(means[i] < means[i + 1] for i in range(5)), means


def test_monotone_variance_growth_rosenblatt():
    model = ModelSpec.stommel_cessi(sigma=0.01)
    cfg = SimConfig(model=model, noise=NoiseSpec.rosenblatt(0.9),
                    x0=attracting_branch(model, 1.0642), y0=1.0642, dt=1e-2,
                    t_end=10.0, n_paths=400, master_seed=31, record_stride=2)
    stats = run_ensemble(cfg)
    d = stats.y - fold_point_stommel(7.5).y_star
    sel = (d > 0.02) & (stats.t > 1.0) & np.isfinite(stats.variance)
    dd, vv = d[sel], stats.variance[sel]
    edges = np.geomspace(dd.max(), dd.min() * 0.999, 5)
    means = [vv[(dd <= edges[i]) & (dd >= edges[i + 1])].mean() for i in range(4)]
    assert all(means[i] < means[i + 1] for i in range(3)), means


def test_coloured_variance_bounded():
    """Coloured forcing saturates: variance stays below
    1.5 sigma^2 tau / 2 plus 3 standard errors."""
    tau, m = 0.05, 400
    d, v = _late_window_variances(NoiseSpec.coloured(tau), m=m, seed=1002)
    cap = 1.5 * 0.01**2 * tau / 2
    se = v * math.sqrt(2.0 / (m - 1))
    assert np.all(v <= cap + 3 * se)


def test_euler_maruyama_shapes():
    out = euler_maruyama(lambda x, y: -x, [1.0, 2.0], 0.1, np.zeros((2, 5)))
    assert out.shape == (2, 6)
    assert np.allclose(out[:, -1], [0.9**5, 2 * 0.9**5])
