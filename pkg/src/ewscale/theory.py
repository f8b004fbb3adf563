"""Closed-form variance predictions and their equation-level oracles.

Stationary variances of the linearized fast variable per noise class,
the critical-exponent grid over (noise, bifurcation) pairs, and three
Lyapunov-type solvers used as oracles against Monte Carlo ensembles:
the scalar non-autonomous variance ODE (white noise), the 2x2 algebraic
matrix equation (coloured noise), and the nonlocal memory integral whose
epsilon -> 0 limit produces the Gamma-function scaling of the
Volterra-class processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, ParameterError, QuadratureError, StiffnessError
from .models import Bifurcation, normal_form_linearization
from .noise import NoiseKind, NoiseSpec

__all__ = [
    "TheoryPrediction",
    "v_infinity_white",
    "v_infinity_coloured",
    "v_infinity_volterra",
    "c_alpha",
    "scaling_exponent",
    "theory_prediction",
    "solve_lyapunov_ode",
    "solve_lyapunov_2x2",
    "volterra_limit_integral",
]

#: Explicit RK4 is stable for |lambda| * step below ~2.785 on the real axis;
#: we refuse above 2.5 to keep a margin.
_RK4_STABILITY = 2.5


def _check_a(a: float) -> float:
    a = float(a)
    if not (a < 0):
        raise DomainError(f"linearization a must be negative (before the bifurcation), got {a}")
    return a


def v_infinity_white(sigma: float, a: float) -> float:
    """Stationary variance sigma^2 / (2 |a|) under white-noise forcing."""
    a = _check_a(a)
    return sigma * sigma / (2.0 * abs(a))


def v_infinity_coloured(sigma: float, tau: float, a: float) -> float:
    """Stationary variance sigma^2 / (2 (1/tau + |a|)) under coloured forcing.

    Bounded by sigma^2 tau / 2 as a -> 0 (the warning sign saturates); the
    white-noise formula is recovered as tau -> infinity.
    """
    a = _check_a(a)
    if not (tau > 0):
        raise ParameterError(f"tau must be positive, got {tau}")
    return sigma * sigma / (2.0 * (1.0 / tau + abs(a)))


def v_infinity_volterra(sigma: float, hurst: float, a: float) -> float:
    """Stationary variance sigma^2 H Gamma(2H) / |a|^{2H} for fBm/Rosenblatt.

    H = 1/2 is accepted as a self-test boundary and reproduces the white
    formula (H Gamma(2H) = 1/2 there).
    """
    a = _check_a(a)
    if not (0.5 <= hurst < 1.0):
        raise ParameterError(f"hurst must be in [1/2, 1), got {hurst}")
    return sigma * sigma * hurst * math.gamma(2.0 * hurst) / abs(a) ** (2.0 * hurst)


def c_alpha(alpha: float) -> float:
    """Kernel constant of an alpha-regular Volterra process, normalized to
    the unit-variance fBm/Rosenblatt instances: c_alpha = H Gamma(2H) / Gamma(2 alpha)
    with H = alpha + 1/2. This ties the |a|^{-(2 alpha + 1)} Gamma(2 alpha)
    form of the stationary variance to the H Gamma(2H) |a|^{-2H} form.
    """
    if not (0.0 < alpha < 0.5):
        raise ParameterError(f"alpha must be in (0, 1/2), got {alpha}")
    hurst = alpha + 0.5
    return hurst * math.gamma(2.0 * hurst) / math.gamma(2.0 * alpha)


_WHITE_EXPONENTS = {
    Bifurcation.PITCHFORK: -1.0,
    Bifurcation.TRANSCRITICAL: -1.0,
    Bifurcation.FOLD: -0.5,
}


def scaling_exponent(noise: NoiseSpec, bifurcation: Bifurcation) -> float:
    """Critical exponent of the stationary variance in the distance to the
    bifurcation: the (noise, bifurcation) grid of the scaling-law table.
    """
    if noise.kind is NoiseKind.WHITE:
        return _WHITE_EXPONENTS[bifurcation]
    if noise.kind is NoiseKind.COLOURED:
        return 0.0
    h = noise.hurst
    if bifurcation is Bifurcation.FOLD:
        return -h
    return -2.0 * h


@dataclass(frozen=True)
class TheoryPrediction:
    """Bundle of closed-form predictions for one (noise, bifurcation) pair.

    ``v_infinity`` maps the slow variable y (< 0, normal-form coordinates)
    to the stationary variance; ``finite_limit`` is the saturation value
    sigma^2 tau / 2 and is present only for coloured noise.
    """

    noise: NoiseSpec
    bifurcation: Bifurcation
    exponent: float
    v_infinity: Callable[[float], float]
    finite_limit: Optional[float] = None


def theory_prediction(noise: NoiseSpec, bifurcation: Bifurcation,
                      sigma: float) -> TheoryPrediction:
    """Prediction for a noise driving a bare normal form with intensity sigma."""
    exponent = scaling_exponent(noise, bifurcation)

    if noise.kind is NoiseKind.WHITE:
        def v_inf(y: float) -> float:
            return v_infinity_white(sigma, normal_form_linearization(bifurcation, y))
        return TheoryPrediction(noise, bifurcation, exponent, v_inf)

    if noise.kind is NoiseKind.COLOURED:
        tau = noise.tau

        def v_inf(y: float) -> float:
            return v_infinity_coloured(sigma, tau, normal_form_linearization(bifurcation, y))
        return TheoryPrediction(noise, bifurcation, exponent, v_inf,
                                finite_limit=sigma * sigma * tau / 2.0)

    hurst = noise.hurst

    def v_inf(y: float) -> float:
        return v_infinity_volterra(sigma, hurst, normal_form_linearization(bifurcation, y))
    return TheoryPrediction(noise, bifurcation, exponent, v_inf)


def solve_lyapunov_ode(a_of_y: Callable[[float], float], sigma: float, epsilon: float,
                       y0: float, v0: float, y_end: float,
                       step: float) -> tuple[np.ndarray, np.ndarray]:
    """Variance ODE epsilon dV/ds = 2 a(y) V + sigma^2 along a unit-speed
    slow sweep y(s) = y0 + sign(y_end - y0) * s, solved with classical RK4.

    Returns (y grid, V on that grid), y running from y0 to y_end. The step
    is in slow-time (equivalently |y|) units. Steps violating the explicit
    stability bound are refused with the required step reported.
    """
    if not (step > 0):
        raise ParameterError(f"step must be positive, got {step}")
    if not (epsilon > 0):
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if y_end == y0:
        return np.array([y0]), np.array([float(v0)])
    sign = 1.0 if y_end > y0 else -1.0
    span = abs(y_end - y0)

    # probe the stiffness along the sweep before integrating
    probe = np.linspace(y0, y_end, 65)
    amax = max(abs(a_of_y(float(y))) for y in probe)
    if 2.0 * amax * step / epsilon > _RK4_STABILITY:
        required = _RK4_STABILITY * epsilon / (2.0 * amax)
        raise StiffnessError(
            f"step {step:g} violates the explicit stability bound for "
            f"max|2a|/eps = {2 * amax / epsilon:g}; need step <= {required:.3g}",
            required_step=required,
        )

    n = max(1, int(math.ceil(span / step)))
    h = span / n
    y_grid = y0 + sign * h * np.arange(n + 1)
    y_grid[-1] = y_end
    v = np.empty(n + 1)
    v[0] = float(v0)

    def rhs(y: float, vv: float) -> float:
        return (2.0 * a_of_y(y) * vv + sigma * sigma) / epsilon

    for k in range(n):
        y = y_grid[k]
        vk = v[k]
        k1 = rhs(y, vk)
        k2 = rhs(y + sign * h / 2, vk + h * k1 / 2)
        k3 = rhs(y + sign * h / 2, vk + h * k2 / 2)
        k4 = rhs(y + sign * h, vk + h * k3)
        v[k + 1] = vk + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return y_grid, v


def solve_lyapunov_2x2(a: float, sigma: float, tau: float) -> np.ndarray:
    """Stationary covariance of the linearized (x, B) coloured-noise system.

    Solves 0 = A C + C A^T + D D^T with A = [[a, -sigma/tau], [0, -1/tau]]
    and D = (sigma, 1)^T in closed form:
    [[s^2/(2(1/tau+|a|)), s/(2(1/tau+|a|))], [., tau/2]].
    """
    if not (tau > 0):
        raise ParameterError(f"tau must be positive, got {tau}")
    a = float(a)
    if not (a < 0):
        raise DomainError(f"drift matrix must be Hurwitz: needs a < 0, got {a}")
    denom = 2.0 * (1.0 / tau + abs(a))
    return np.array([
        [sigma * sigma / denom, sigma / denom],
        [sigma / denom, tau / 2.0],
    ])


def volterra_limit_integral(a: Union[float, Callable[[float], float]], alpha: float,
                            epsilon: float, y: float, rtol: float = 1e-6) -> float:
    """Memory integral int_0^{y/eps} exp(gamma(y, y - eps t)/eps) t^{2a-1} dt
    with gamma(s, u) = int_u^s a(r) dr.

    The integrable t^{2 alpha - 1} endpoint singularity is removed by the
    substitution u = t^{2 alpha} (equivalent to a mesh graded like
    j^{1/(2 alpha)} near zero). For frozen a the integral converges to
    Gamma(2 alpha) |a|^{-2 alpha} as epsilon -> 0. Raises QuadratureError,
    carrying the achieved error estimate, when the quadrature does not
    converge to ``rtol``.
    """
    from scipy.integrate import quad

    if not (0.0 < alpha < 0.5):
        raise ParameterError(f"alpha must be in (0, 1/2), got {alpha}")
    if not (epsilon > 0):
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if not (y > 0):
        raise ParameterError(f"upper limit needs y > 0, got {y}")

    if callable(a):
        a_fun = a
        aval = a_fun(y)
    else:
        aval = float(a)
        a_fun = None
    if not (aval < 0):
        raise DomainError(f"a(y) must be negative, got {aval}")

    two_a = 2.0 * alpha

    if a_fun is None:
        def gamma_exp(t: float) -> float:
            return aval * t  # gamma(y, y - eps t)/eps = a * t for frozen a
    else:
        def gamma_exp(t: float) -> float:
            val, _ = quad(a_fun, y - epsilon * t, y, limit=200)
            return val / epsilon

    u_max = (y / epsilon) ** two_a

    def integrand(u: float) -> float:
        t = u ** (1.0 / two_a)
        return math.exp(gamma_exp(t))

    result, abserr = quad(integrand, 0.0, u_max, limit=400)
    result /= two_a
    abserr /= two_a
    if not math.isfinite(result) or abserr > rtol * max(abs(result), 1e-300) + 1e-14:
        raise QuadratureError(
            f"memory-integral quadrature did not converge: estimate {result:g} "
            f"with error {abserr:g} (requested rtol {rtol:g})",
            error_estimate=abserr,
        )
    return result
