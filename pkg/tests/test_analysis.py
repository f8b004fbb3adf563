"""Scaling-fit machinery: exactness, binning, verdicts, aliasing scan."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ewscale import (Bifurcation, EnsembleStats, NoiseSpec, Verdict,
                     compare_to_theory, fit_power_law, loglog_fit,
                     misclassification_demo)
from ewscale.errors import (DataError, InsufficientDataError, ParameterError)


def _synthetic_stats(beta: float, c: float = 1e-4, y_star: float = 0.0,
                     n: int = 400, noise: np.ndarray | None = None) -> EnsembleStats:
    """Moving-y trace with variance = c * d^beta (+ optional perturbation)."""
    y = np.linspace(-0.6, -0.005, n)
    d = np.abs(y - y_star)
    v = c * d**beta
    if noise is not None:
        v = v * (1.0 + noise)
    t = np.linspace(0.0, 1.0, n)
    return EnsembleStats(t=t, y=y, variance=v,
                         n_survivors=np.full(n, 1000, dtype=int))


@pytest.mark.parametrize("beta", [-1.0, -0.9, -0.5, 0.0])
def test_exact_power_law_recovered(beta):
    """Noiseless V = C d^beta: slope to 1e-10 and R^2 = 1."""
    fit = loglog_fit(_synthetic_stats(beta), 0.0, (0.01, 0.5), bins=12)
    assert abs(fit.slope - beta) < 1e-10
    assert fit.r_squared > 1 - 1e-12
    expected = Verdict.BOUNDED if beta == 0.0 else Verdict.DIVERGING
    assert fit.verdict is expected


def test_fit_reports_window_and_points():
    fit = loglog_fit(_synthetic_stats(-0.5), 0.0, (0.01, 0.5), bins=10)
    assert fit.window == (0.01, 0.5)
    assert 5 <= fit.n_points <= 10
    assert len(fit.log_d) == fit.n_points
    assert np.allclose(fit.fit_line, fit.intercept + fit.slope * fit.log_d)


def test_fit_errors():
    stats = _synthetic_stats(-0.5)
    with pytest.raises(ParameterError):
        loglog_fit(stats, 0.0, (0.5, 0.01), bins=12)  # inverted window
    with pytest.raises(ParameterError):
        loglog_fit(stats, 0.0, (0.01, 0.5), bins=3)
    with pytest.raises(DataError):
        loglog_fit(stats, 0.0, (0.7, 0.9), bins=12)  # outside recorded range
    bad = _synthetic_stats(-0.5)
    bad.variance[200] = -1e-9
    with pytest.raises(DataError):
        loglog_fit(bad, 0.0, (0.01, 0.5), bins=12)
    # absent (NaN) variance is excluded, not an error
    holey = _synthetic_stats(-0.5)
    holey.variance[::7] = np.nan
    fit = loglog_fit(holey, 0.0, (0.01, 0.5), bins=12)
    assert abs(fit.slope + 0.5) < 1e-10


def test_insufficient_bins():
    stats = _synthetic_stats(-0.5, n=6)  # sparse trace -> few non-empty bins
    narrow = EnsembleStats(t=stats.t[:3], y=stats.y[:3],
                           variance=stats.variance[:3],
                           n_survivors=stats.n_survivors[:3])
    with pytest.raises(InsufficientDataError):
        loglog_fit(narrow, 0.0, (0.01, 0.5), bins=12)


def test_bin_invariance_within_stderr():
    """Doubling the bin count moves the slope by less than its stderr on
    well-sampled noisy data."""
    rng = np.random.default_rng(777)
    noise = 0.05 * rng.standard_normal(4000)
    stats = _synthetic_stats(-0.9, n=4000, noise=noise)
    f1 = loglog_fit(stats, 0.0, (0.01, 0.5), bins=12)
    f2 = loglog_fit(stats, 0.0, (0.01, 0.5), bins=24)
    assert abs(f1.slope - f2.slope) < max(f1.slope_stderr, f2.slope_stderr)


def test_verdict_rule():
    flat = loglog_fit(_synthetic_stats(0.0), 0.0, (0.01, 0.5), bins=12)
    assert flat.verdict is Verdict.BOUNDED
    mild = loglog_fit(_synthetic_stats(-0.14), 0.0, (0.01, 0.5), bins=12)
    # slope within the band but the final window keeps rising: bounded only
    # if also flat; a -0.14 power law still drifts beyond 3 SE of flat
    assert mild.slope > -0.15
    steep = loglog_fit(_synthetic_stats(-0.5), 0.0, (0.01, 0.5), bins=12)
    assert steep.verdict is Verdict.DIVERGING


def test_fit_power_law_core_against_polyfit():
    rng = np.random.default_rng(4242)
    d = np.geomspace(0.01, 1.0, 50)
    v = 2.5 * d**-0.7 * np.exp(0.03 * rng.standard_normal(50))
    slope, intercept, r2, stderr = fit_power_law(d, v)
    ref = np.polyfit(np.log(d), np.log(v), 1)
    assert abs(slope - ref[0]) < 1e-12
    assert abs(intercept - ref[1]) < 1e-12
    assert 0 < stderr < 0.05
    assert 0.9 < r2 <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.5, 0.5), st.floats(0.1, 10.0))
def test_fit_power_law_exact_property(beta, c):
    d = np.geomspace(0.02, 0.8, 20)
    slope, intercept, _, _ = fit_power_law(d, c * d**beta)
    assert abs(slope - beta) < 1e-9
    assert abs(intercept - math.log(c)) < 1e-9


# ---------------------------------------------------------------------------
# theory comparison and aliasing
# ---------------------------------------------------------------------------

def test_compare_to_theory_threshold_logic():
    fit = loglog_fit(_synthetic_stats(-0.52), 0.0, (0.01, 0.5), bins=12)
    rep = compare_to_theory(fit, NoiseSpec.white(), Bifurcation.FOLD, tolerance=0.1)
    assert rep.passed and abs(rep.difference - (-0.02)) < 1e-9

    fit2 = loglog_fit(_synthetic_stats(-0.9), 0.0, (0.01, 0.5), bins=12)
    rep2 = compare_to_theory(fit2, NoiseSpec.fbm(0.9), Bifurcation.FOLD,
                             tolerance=0.15)
    assert rep2.passed


def test_compare_to_theory_misclassification_note():
    """A -0.5 slope against the fbm/fold prediction fails and the note
    points at the white-noise alias."""
    fit = loglog_fit(_synthetic_stats(-0.5), 0.0, (0.01, 0.5), bins=12)
    rep = compare_to_theory(fit, NoiseSpec.fbm(0.9), Bifurcation.FOLD,
                            tolerance=0.15)
    assert not rep.passed
    assert "white/fold" in rep.note
    assert "misclassify" in rep.note
    assert len(rep.residuals) == fit.n_points


def test_misclassification_demo_boundary():
    """H -> 1: the fold exponent -1 collides with white pitchfork and
    transcritical entries."""
    rep = misclassification_demo(hurst=1.0)
    assert rep.fold_exponent == -1.0
    assert any("white/pitchfork" in m for m in rep.matches)
    assert any("white/transcritical" in m for m in rep.matches)


def test_misclassification_demo_interior():
    """H = 0.75: no white-noise alias; ambiguity only within the
    long-memory class (H unidentifiable from the slope). Oracle: the
    exhaustive grid scan finds no match."""
    rep = misclassification_demo(hurst=0.75)
    assert rep.fold_exponent == -0.75
    assert rep.matches == []
    assert rep.ambiguous_within_volterra
    # exhaustive scan: white {-1, -1, -0.5}, coloured {0}, fbm pf/tc need
    # H' = 0.375 which is out of range
    grid = {-1.0, -0.5, 0.0}
    assert -0.75 not in grid and not (0.5 < 0.375 < 1.0)


def test_misclassification_demo_white_is_clean():
    rep = misclassification_demo(hurst=None)
    assert rep.matches == []
    assert not rep.ambiguous_within_volterra
    with pytest.raises(ParameterError):
        misclassification_demo(hurst=0.4)
