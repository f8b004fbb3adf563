"""Fast-slow bifurcation models.

Three normal forms (fold x^2 + y, transcritical x(x+y), subcritical
pitchfork x(y + x^2)) and the Stommel-Cessi two-box ocean model with fast
drift y - x(1 + eta^2 (1-x)^2). Each model exposes its fast drift, the
attracting branch of the critical manifold x = h0(y), the linearization
a(y) = d_x f(h0(y), y), and (for Stommel) the fold point in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "ModelKind",
    "Bifurcation",
    "ModelSpec",
    "BifurcationPoint",
    "drift",
    "attracting_branch",
    "linearization",
    "normal_form_linearization",
    "fold_point_stommel",
    "bifurcation_point",
]

_ROOT_TOL = 1e-12


class ModelKind(Enum):
    FOLD = "fold"
    TRANSCRITICAL = "transcritical"
    PITCHFORK = "pitchfork"
    STOMMEL_CESSI = "stommel_cessi"


class Bifurcation(Enum):
    FOLD = "fold"
    TRANSCRITICAL = "transcritical"
    PITCHFORK = "pitchfork"


@dataclass(frozen=True)
class ModelSpec:
    """A fast-slow model: fast drift plus a constant slow drift rate.

    ``slow_rate`` is the full dy/dt (the normal forms drift upward at
    +epsilon toward y* = 0, the Stommel freshwater parameter decreases at
    -epsilon toward the upper fold). ``slow_rate = 0`` freezes y.
    """

    kind: ModelKind
    epsilon: float = 0.01
    sigma: float = 0.01
    slow_rate: Optional[float] = None
    eta2: Optional[float] = None

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if self.sigma < 0:
            raise ParameterError(f"sigma must be nonnegative, got {self.sigma}")
        if self.kind is ModelKind.STOMMEL_CESSI:
            if self.eta2 is None or not (self.eta2 > 0):
                raise ParameterError(f"stommel_cessi needs eta2 > 0, got {self.eta2}")
        elif self.eta2 is not None:
            raise ParameterError("eta2 only applies to the stommel_cessi model")
        if self.slow_rate is None:
            default = -self.epsilon if self.kind is ModelKind.STOMMEL_CESSI else self.epsilon
            object.__setattr__(self, "slow_rate", default)

    @staticmethod
    def fold(epsilon: float = 0.01, sigma: float = 0.01,
             slow_rate: Optional[float] = None) -> "ModelSpec":
        return ModelSpec(ModelKind.FOLD, epsilon, sigma, slow_rate)

    @staticmethod
    def transcritical(epsilon: float = 0.01, sigma: float = 0.01,
                      slow_rate: Optional[float] = None) -> "ModelSpec":
        return ModelSpec(ModelKind.TRANSCRITICAL, epsilon, sigma, slow_rate)

    @staticmethod
    def pitchfork(epsilon: float = 0.01, sigma: float = 0.01,
                  slow_rate: Optional[float] = None) -> "ModelSpec":
        return ModelSpec(ModelKind.PITCHFORK, epsilon, sigma, slow_rate)

    @staticmethod
    def stommel_cessi(eta2: float = 7.5, epsilon: float = 0.01, sigma: float = 0.01,
                      slow_rate: Optional[float] = None) -> "ModelSpec":
        return ModelSpec(ModelKind.STOMMEL_CESSI, epsilon, sigma, slow_rate, eta2)

    @property
    def bifurcation(self) -> Bifurcation:
        if self.kind is ModelKind.STOMMEL_CESSI:
            return Bifurcation.FOLD
        return Bifurcation(self.kind.value)

    @property
    def y_star(self) -> float:
        """Slow-variable coordinate of the bifurcation the sweep runs into."""
        if self.kind is ModelKind.STOMMEL_CESSI:
            return fold_point_stommel(self.eta2).y_star
        return 0.0

    @property
    def attracting_side(self) -> float:
        """Sign s such that s * (y - y_star) > 0 on the attracting branch."""
        return 1.0 if self.kind is ModelKind.STOMMEL_CESSI else -1.0


@dataclass(frozen=True)
class BifurcationPoint:
    x_star: float
    y_star: float
    kind: Bifurcation


def drift(model: ModelSpec, x, y):
    """Fast drift f(x, y); accepts scalars or numpy arrays."""
    k = model.kind
    if k is ModelKind.FOLD:
        return x * x + y
    if k is ModelKind.TRANSCRITICAL:
        return x * (x + y)
    if k is ModelKind.PITCHFORK:
        return x * (y + x * x)
    one_minus = 1.0 - x
    return y - x * (1.0 + model.eta2 * one_minus * one_minus)


def drift_dx(model: ModelSpec, x, y):
    """Analytic d_x f(x, y)."""
    k = model.kind
    if k is ModelKind.FOLD:
        return 2.0 * x
    if k is ModelKind.TRANSCRITICAL:
        return 2.0 * x + y
    if k is ModelKind.PITCHFORK:
        return y + 3.0 * x * x
    one_minus = 1.0 - x
    return -(1.0 + model.eta2 * one_minus * one_minus - 2.0 * model.eta2 * x * one_minus)


def _stommel_fold_x(eta2: float) -> tuple[float, float]:
    """x coordinates of the two folds; raises if the manifold is monotone.

    Folds solve d_x f = 0, i.e. 3 x^2 - 4 x + 1 + 1/eta2 = 0, so they
    exist only for eta2 > 3 (S-shaped regime).
    """
    disc = 1.0 - 3.0 / eta2
    if disc <= 0:
        raise DomainError(
            f"eta2 = {eta2:g} gives a monotone critical manifold (needs eta2 > 3): no fold"
        )
    r = math.sqrt(disc)
    return (2.0 + r) / 3.0, (2.0 - r) / 3.0


def fold_point_stommel(eta2: float) -> BifurcationPoint:
    """Upper fold of the Stommel-Cessi manifold, in closed form.

    Solves f = 0 and d_x f = 0 simultaneously; d_x f = 0 is a quadratic in
    x and the upper fold is its larger root. For eta2 = 7.5 this is
    ((10 + sqrt(15))/15, 11/9 - 1/sqrt(15)).
    """
    if not (eta2 > 0):
        raise ParameterError(f"eta2 must be positive, got {eta2}")
    x_up, _ = _stommel_fold_x(eta2)
    y_up = x_up * (1.0 + eta2 * (1.0 - x_up) ** 2)
    return BifurcationPoint(x_star=x_up, y_star=y_up, kind=Bifurcation.FOLD)


def _stommel_upper_root(eta2: float, y: float) -> float:
    """Largest real root of x (1 + eta2 (1-x)^2) = y, for y >= upper-fold y*.

    Bracketed Brent solve (bracket from the fold algebra) followed by a
    Newton polish to |f| < 1e-12.
    """
    from scipy.optimize import brentq

    fold = fold_point_stommel(eta2)
    if y < fold.y_star - 1e-13:
        raise DomainError(
            f"y = {y:g} is past the upper fold (y* = {fold.y_star:.12g}): "
            "no attracting upper branch"
        )
    if abs(y - fold.y_star) <= 1e-13:
        return fold.x_star

    def g(x):
        return y - x * (1.0 + eta2 * (1.0 - x) ** 2)

    lo = fold.x_star
    hi = max(2.0, lo + 1.0, (y / eta2) ** (1.0 / 3.0) + 2.0)
    x = brentq(g, lo, hi, xtol=1e-14, rtol=8.881784197001252e-16)
    for _ in range(4):
        fx = g(x)
        if abs(fx) < _ROOT_TOL:
            break
        dfx = -(1.0 + eta2 * (1.0 - x) ** 2) + 2.0 * eta2 * x * (1.0 - x)
        x -= fx / dfx
    return x


def attracting_branch(model: ModelSpec, y: float) -> float:
    """Attracting branch x = h0(y) of the critical manifold.

    Normal forms: h0 = -sqrt(-y) for the fold (the d_x f < 0 root) and
    h0 = 0 for transcritical/pitchfork, valid for y < 0. Stommel: the
    largest real root of the manifold cubic (upper branch), valid for
    y >= y* of the upper fold.
    """
    k = model.kind
    if k is ModelKind.STOMMEL_CESSI:
        return _stommel_upper_root(model.eta2, float(y))
    if y >= 0:
        raise DomainError(f"normal forms have no attracting branch at y = {y:g} >= 0")
    if k is ModelKind.FOLD:
        return -math.sqrt(-y)
    return 0.0


def linearization(model: ModelSpec, y: float) -> float:
    """a(y) = d_x f(h0(y), y) along the attracting branch (negative there)."""
    if model.kind is ModelKind.STOMMEL_CESSI:
        return drift_dx(model, attracting_branch(model, y), y)
    if y >= 0:
        raise DomainError(f"linearization undefined at y = {y:g} >= 0 (past bifurcation)")
    if model.kind is ModelKind.FOLD:
        return -2.0 * math.sqrt(-y)
    return y


def normal_form_linearization(bifurcation: Bifurcation, y: float) -> float:
    """a(y) of a bare normal form: y for pitchfork/transcritical,
    -2 sqrt(-y) for the fold."""
    if y >= 0:
        raise DomainError(f"normal-form linearization needs y < 0, got {y:g}")
    if bifurcation is Bifurcation.FOLD:
        return -2.0 * math.sqrt(-y)
    return y


def bifurcation_point(model: ModelSpec) -> BifurcationPoint:
    """The bifurcation a forward slow sweep runs into."""
    if model.kind is ModelKind.STOMMEL_CESSI:
        return fold_point_stommel(model.eta2)
    return BifurcationPoint(x_star=0.0, y_star=0.0, kind=model.bifurcation)


def manifold_table(model: ModelSpec, y_values: np.ndarray) -> np.ndarray:
    """Columns (y, x_upper, a) over a y grid on the attracting side."""
    y_values = np.asarray(y_values, dtype=float)
    out = np.empty((len(y_values), 3))
    for i, y in enumerate(y_values):
        x = attracting_branch(model, y)
        out[i] = (y, x, drift_dx(model, x, y))
    return out
