"""Sample-path generators for the four driving-noise classes.

White (Brownian), coloured (Ornstein-Uhlenbeck with correlation time tau),
fractional Brownian motion with Hurst index H in (1/2, 1), and the
Rosenblatt process (non-Gaussian, same covariance as fBm). All generators
are pure functions of an :class:`RngStream`, so ensembles are bit
reproducible for any scheduling of the per-path work.

Synthesis methods:

* Brownian: i.i.d. Gaussian increments of variance dt.
* Ornstein-Uhlenbeck: exact one-step transition (no Euler error), with a
  stationary initial state by default.
* fBm: circulant embedding of the increment covariance (exact in
  distribution, O(n log n)), with a dense Cholesky fallback when the
  embedding is not positive semidefinite.
* Rosenblatt: discretized off-diagonal double Wiener integral of the
  moving-average kernel, on a graded spatial grid with exact cell-averaged
  kernel values; the integration domain left of the cutoff is folded in
  through its closed-form Gaussian (rank-one) limit so that the normalized
  process has unit variance at t = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, TextIO

import numpy as np

from .errors import ParameterError, SizingError

__all__ = [
    "NoiseKind",
    "NoiseSpec",
    "NoisePath",
    "RngStream",
    "TruncationConfig",
    "generate_brownian",
    "generate_ou",
    "generate_fbm",
    "generate_rosenblatt",
    "FgnSampler",
    "RosenblattSampler",
    "write_path_csv",
]


class NoiseKind(Enum):
    WHITE = "white"
    COLOURED = "coloured"
    FBM = "fbm"
    ROSENBLATT = "rosenblatt"


@dataclass(frozen=True)
class NoiseSpec:
    """Tagged description of a driving noise with validated parameters.

    ``tau`` is the correlation time of coloured noise; ``hurst`` is the
    self-similarity index of the long-memory (Volterra-class) processes.
    For those, ``alpha = hurst - 1/2`` is the kernel regularity.
    """

    kind: NoiseKind
    tau: Optional[float] = None
    hurst: Optional[float] = None

    def __post_init__(self):
        if self.kind is NoiseKind.COLOURED:
            if self.tau is None or not (self.tau > 0):
                raise ParameterError(f"coloured noise needs tau > 0, got {self.tau}")
        elif self.tau is not None:
            raise ParameterError(f"tau is only valid for coloured noise, got kind={self.kind}")
        if self.kind in (NoiseKind.FBM, NoiseKind.ROSENBLATT):
            if self.hurst is None or not (0.5 < self.hurst < 1.0):
                raise ParameterError(
                    f"{self.kind.value} needs hurst in (1/2, 1), got {self.hurst}"
                )
        elif self.hurst is not None:
            raise ParameterError(f"hurst is only valid for fbm/rosenblatt, got kind={self.kind}")

    @property
    def alpha(self) -> Optional[float]:
        """Kernel regularity alpha = hurst - 1/2 for Volterra-class noises."""
        return None if self.hurst is None else self.hurst - 0.5

    @staticmethod
    def white() -> "NoiseSpec":
        return NoiseSpec(NoiseKind.WHITE)

    @staticmethod
    def coloured(tau: float) -> "NoiseSpec":
        return NoiseSpec(NoiseKind.COLOURED, tau=tau)

    @staticmethod
    def fbm(hurst: float) -> "NoiseSpec":
        return NoiseSpec(NoiseKind.FBM, hurst=hurst)

    @staticmethod
    def rosenblatt(hurst: float) -> "NoiseSpec":
        return NoiseSpec(NoiseKind.ROSENBLATT, hurst=hurst)

    def label(self) -> str:
        if self.kind is NoiseKind.COLOURED:
            return f"coloured(tau={self.tau:g})"
        if self.hurst is not None:
            return f"{self.kind.value}(H={self.hurst:g})"
        return self.kind.value


@dataclass(frozen=True)
class RngStream:
    """Addressable, reproducible random stream.

    Streams with distinct ``stream_index`` are statistically independent;
    identical (master_seed, stream_index) pairs give identical output on
    any worker layout. Built on numpy's SeedSequence spawn keys.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < 2**64):
            raise ParameterError(f"master_seed must be a 64-bit unsigned int, got {self.master_seed}")
        if int(self.stream_index) < 0:
            raise ParameterError(f"stream_index must be >= 0, got {self.stream_index}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.master_seed),
                                    spawn_key=(int(self.stream_index),))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.master_seed, index)


@dataclass
class NoisePath:
    """Sampled trajectory on the uniform grid t_k = k*dt.

    ``values[0] == 0`` and ``values[k+1] - values[k] == increments[k]``
    exactly. ``method`` records which synthesis route produced the path.
    """

    dt: float
    values: np.ndarray
    increments: np.ndarray
    method: Optional[str] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.increments = np.asarray(self.increments, dtype=float)
        if self.values.ndim != 1 or self.increments.ndim != 1:
            raise ParameterError("values and increments must be 1-d")
        if len(self.increments) != len(self.values) - 1:
            raise ParameterError("increments must have length len(values) - 1")

    @property
    def n(self) -> int:
        return len(self.increments)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.dt


def _path_from_increments(dt: float, increments: np.ndarray, method: str) -> NoisePath:
    values = np.zeros(len(increments) + 1)
    np.cumsum(increments, out=values[1:])
    # store the exact float differences so diff(values) == increments bitwise
    return NoisePath(dt=dt, values=values, increments=np.diff(values), method=method)


def _check_n_dt(n: int, dt: float) -> None:
    if n < 0 or int(n) != n:
        raise ParameterError(f"step count n must be a nonnegative integer, got {n}")
    if not (dt > 0) or not math.isfinite(dt):
        raise ParameterError(f"time step dt must be positive, got {dt}")


def generate_brownian(n: int, dt: float, rng: RngStream) -> NoisePath:
    """Standard Brownian motion: i.i.d. N(0, dt) increments."""
    _check_n_dt(n, dt)
    gen = rng.generator()
    incr = gen.standard_normal(int(n)) * math.sqrt(dt)
    return _path_from_increments(dt, incr, "iid-gaussian")


def generate_ou(tau: float, n: int, dt: float, rng: RngStream,
                stationary_start: bool = True) -> NoisePath:
    """Ornstein-Uhlenbeck path B' = -B/tau + W', via the exact transition.

    One step is B_{k+1} = phi B_k + s Z_k with phi = exp(-dt/tau) and
    s^2 = (tau/2)(1 - phi^2), so there is no time-discretization error.
    The initial state is drawn from the stationary law N(0, tau/2) unless
    ``stationary_start`` is False (then B_0 = 0). The stored path is
    shifted to start at zero (values[k] = B_k - B_0); shift-invariant
    statistics such as the sample variance and autocorrelation are
    unaffected.
    """
    _check_n_dt(n, dt)
    if not (tau > 0):
        raise ParameterError(f"correlation time tau must be positive, got {tau}")
    from scipy.signal import lfilter

    gen = rng.generator()
    phi = math.exp(-dt / tau)
    s = math.sqrt(0.5 * tau * (1.0 - phi * phi))
    b0 = math.sqrt(0.5 * tau) * gen.standard_normal() if stationary_start else 0.0
    z = gen.standard_normal(int(n))
    values = np.empty(int(n) + 1)
    values[0] = 0.0
    if n > 0:
        b, _ = lfilter([s], [1.0, -phi], z, zi=[phi * b0])
        values[1:] = b - b0
    return NoisePath(dt=dt, values=values, increments=np.diff(values),
                     method="exact-transition")


# ---------------------------------------------------------------------------
# fractional Brownian motion
# ---------------------------------------------------------------------------

def fgn_autocovariance(hurst: float, lags: np.ndarray) -> np.ndarray:
    """Autocovariance of unit-spacing fractional Gaussian noise."""
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * ((k + 1.0) ** h2 + np.abs(k - 1.0) ** h2 - 2.0 * k**h2)


class FgnSampler:
    """Exact sampler of fractional Gaussian noise increments.

    Precomputes the circulant eigenvalues once so ensembles pay the
    embedding setup a single time. Each ``sample`` call consumes exactly
    2n normals from the supplied generator (fixed draw order), keeping
    per-path streams independent of batching.
    """

    def __init__(self, hurst: float, n: int, dt: float):
        if not (0.5 <= hurst < 1.0):
            raise ParameterError(f"hurst must be in [1/2, 1) (1/2 allowed as white-noise "
                                 f"self-test), got {hurst}")
        _check_n_dt(n, dt)
        if n < 1:
            raise ParameterError("fBm synthesis needs n >= 1")
        self.hurst = float(hurst)
        self.n = int(n)
        self.dt = float(dt)
        self.scale = dt**hurst
        gamma = fgn_autocovariance(hurst, np.arange(n + 1))
        if n <= 4:
            self.method = "dense-cholesky"
            self._chol = self._dense_factor(gamma)
            self._sqrt_lam = None
            return
        # circulant first row [g0..gn, g_{n-1}..g1], length 2n
        row = np.concatenate([gamma, gamma[-2:0:-1]])
        lam = np.fft.fft(row).real
        if lam.min() < -1e-9 * lam.max():
            self.method = "dense-cholesky"
            self._chol = self._dense_factor(gamma)
            self._sqrt_lam = None
        else:
            self.method = "circulant-embedding"
            self._sqrt_lam = np.sqrt(np.clip(lam, 0.0, None))
            self._chol = None

    @staticmethod
    def _dense_factor(gamma: np.ndarray) -> np.ndarray:
        from scipy.linalg import cholesky, toeplitz

        cov = toeplitz(gamma[:-1])
        return cholesky(cov, lower=True)

    def sample(self, gen: np.random.Generator) -> np.ndarray:
        """One increment vector of length n with the exact fGn law."""
        n = self.n
        if self._chol is not None:
            return self.scale * (self._chol @ gen.standard_normal(n))
        # Hermitian-symmetrized spectral noise (2n normals per path); the
        # symmetry makes the inverse transform real, so the half-spectrum
        # irfft computes it at half the cost
        z = np.empty(n + 1, dtype=complex)
        z[0] = gen.standard_normal()
        z[n] = gen.standard_normal()
        v = gen.standard_normal((n - 1, 2))
        z[1:n] = (v[:, 0] + 1j * v[:, 1]) / math.sqrt(2.0)
        out = np.fft.irfft(self._sqrt_lam[:n + 1] * z, 2 * n) * math.sqrt(2 * n)
        return self.scale * out[:n]


def generate_fbm(hurst: float, n: int, dt: float, rng: RngStream) -> NoisePath:
    """Fractional Brownian motion, exact in distribution.

    Increments are drawn from the exact fGn covariance
    gamma(k) = (dt^{2H}/2)(|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}), giving
    E[(B_t - B_s)^2] = |t - s|^{2H} and E[B_1^2] = 1. The boundary value
    hurst = 1/2 is accepted as a self-test mode and reduces to Brownian
    motion. ``path.method`` reports whether the circulant embedding or the
    dense fallback ran.
    """
    _check_n_dt(n, dt)
    if n == 0:
        return NoisePath(dt=dt, values=np.zeros(1), increments=np.zeros(0),
                         method="circulant-embedding")
    sampler = FgnSampler(hurst, n, dt)
    incr = sampler.sample(rng.generator())
    return _path_from_increments(dt, incr, sampler.method)


# ---------------------------------------------------------------------------
# Rosenblatt process
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncationConfig:
    """Discretization of the Rosenblatt double-integral representation.

    The spatial (Wiener) domain is truncated at -cutoff_mult * t_end; the
    near field carries a uniform grid of width ``dy`` (defaults to dt) on
    [-t_end, t_end] that coarsens geometrically by ``growth`` toward the
    cutoff. The part of the domain left of the cutoff is not discarded: it
    enters through its closed-form rank-one Gaussian limit, which keeps
    the unit-variance normalization intact (the raw kernel tail decays so
    slowly that plain truncation at any practical cutoff would lose an
    O(1) variance fraction). ``u_refine`` refines the time quadrature of
    the kernel relative to the output grid.
    """

    cutoff_mult: float = 50.0
    dy: Optional[float] = None
    growth: float = 1.06
    u_refine: int = 2
    mem_cap_bytes: int = 2 << 30

    def __post_init__(self):
        if not (self.cutoff_mult > 1.0):
            raise ParameterError("cutoff_mult must exceed 1")
        if self.dy is not None and not (self.dy > 0):
            raise ParameterError("dy must be positive")
        if not (self.growth > 1.0):
            raise ParameterError("growth must exceed 1")
        if self.u_refine < 1 or int(self.u_refine) != self.u_refine:
            raise ParameterError("u_refine must be a positive integer")


def rosenblatt_prefactor(hurst: float) -> float:
    """Normalization d(H) of the double Wiener integral with kernel
    (u-y1)_+^{(H-2)/2} (u-y2)_+^{(H-2)/2}, chosen so that E[R_1^2] = 1.

    The second-moment identity for double Wiener integrals together with
    int_{-inf}^{u^v} (u-y)^c (v-y)^c dy = B(H/2, 1-H) |u-v|^{H-1}
    (c = (H-2)/2) gives E[R_t^2] = 2 d^2 B(H/2,1-H)^2 t^{2H} / (H(2H-1)),
    hence d = sqrt(H(2H-1)/2) / B(H/2, 1-H).
    """
    b = math.gamma(hurst / 2) * math.gamma(1 - hurst) / math.gamma(1 - hurst / 2)
    return math.sqrt(hurst * (2 * hurst - 1) / 2.0) / b


class RosenblattSampler:
    """Shared discretization tables for Rosenblatt path synthesis.

    Realizes, per path, the off-diagonal double sum
    sum_{i != j} A_t(y_i, y_j) W_i W_j with
    A_t(y1, y2) = int_0^t (u-y1)_+^{(H-2)/2} (u-y2)_+^{(H-2)/2} du
    via the algebraically identical form int_0^t [S(u)^2 - Q(u)] du,
    S(u) = sum_i g_u(i) W_i, Q(u) = sum_i g_u(i)^2 W_i^2, where g_u(i) is
    the exact average of the kernel over cell i. Cells have variance
    |cell| and the diagonal i = j is excluded by construction. Beyond the
    left cutoff the kernel factorizes to leading order in t_end/cutoff, so
    that region contributes 2 G M_t + t (G^2 - v) with a single Gaussian
    G ~ N(0, v) and M_t = int_0^t S(u) du.
    """

    def __init__(self, hurst: float, n: int, dt: float,
                 trunc: Optional[TruncationConfig] = None):
        if not (0.5 < hurst < 1.0):
            raise ParameterError(f"rosenblatt needs hurst in (1/2, 1), got {hurst}")
        _check_n_dt(n, dt)
        if n < 1:
            raise ParameterError("rosenblatt synthesis needs n >= 1")
        trunc = trunc or TruncationConfig()
        self.hurst = float(hurst)
        self.n = int(n)
        self.dt = float(dt)
        self.trunc = trunc
        t_end = n * dt
        dy = trunc.dy if trunc.dy is not None else dt
        cutoff = trunc.cutoff_mult * t_end

        edges = self._build_edges(t_end, dy, trunc.growth, cutoff)
        n_u = n * trunc.u_refine + 1
        est = self._estimate_bytes(n_u, len(edges) - 1)
        if est > trunc.mem_cap_bytes:
            raise SizingError(
                f"rosenblatt kernel table would need ~{est / 2**20:.0f} MiB "
                f"(cap {trunc.mem_cap_bytes / 2**20:.0f} MiB); increase dy, "
                f"lower u_refine, or raise mem_cap_bytes"
            )

        self.edges = edges
        self.widths = np.diff(edges)
        self.du = dt / trunc.u_refine
        u = np.arange(n_u) * self.du
        half_h = hurst / 2.0
        # exact cell averages of (u - y)_+^{(H-2)/2}
        upper = np.maximum(u[:, None] - edges[None, :-1], 0.0) ** half_h
        lower = np.maximum(u[:, None] - edges[None, 1:], 0.0) ** half_h
        self.kernel = (upper - lower) / (half_h * self.widths[None, :])
        self.kernel_sq = self.kernel * self.kernel
        self.sqrt_widths = np.sqrt(self.widths)
        self.var_far = cutoff ** (hurst - 1.0) / (1.0 - hurst)
        self.prefactor = rosenblatt_prefactor(hurst)
        self._trap = np.empty(n_u)
        self._trap[:] = self.du
        self._trap[0] = self._trap[-1] = self.du / 2.0

    @staticmethod
    def _build_edges(t_end: float, dy: float, growth: float, cutoff: float) -> np.ndarray:
        n_uniform = max(1, int(round(2.0 * t_end / dy)))
        uniform = -t_end + dy * np.arange(n_uniform + 1)
        uniform[-1] = t_end
        geo = []
        lo, w = -t_end, dy
        while lo > -cutoff:
            w *= growth
            lo -= w
            geo.append(lo)
        if geo:
            geo[-1] = -cutoff
        return np.concatenate([np.array(geo[::-1]), uniform])

    @staticmethod
    def _estimate_bytes(n_u: int, n_cells: int) -> int:
        # kernel table, its elementwise square, and one transient
        return 3 * n_u * n_cells * 8

    def sample_values(self, gen: np.random.Generator) -> np.ndarray:
        """One path (length n + 1, starting at 0) at t_k = k*dt."""
        w = gen.standard_normal(len(self.widths)) * self.sqrt_widths
        g_far = gen.standard_normal() * math.sqrt(self.var_far)
        s = self.kernel @ w
        q = self.kernel_sq @ (w * w)
        f = s * s - q
        near = np.zeros_like(f)
        np.cumsum((f[1:] + f[:-1]) * (0.5 * self.du), out=near[1:])
        m = np.zeros_like(s)
        np.cumsum((s[1:] + s[:-1]) * (0.5 * self.du), out=m[1:])
        t = np.arange(len(f)) * self.du
        r = self.prefactor * (near + 2.0 * g_far * m + t * (g_far * g_far - self.var_far))
        return r[:: self.trunc.u_refine]

    def exact_variance(self, t_index: Optional[int] = None) -> float:
        """Second moment of the discrete object at output index t_index.

        Independent of sampling: uses the exact Gaussian/chaos moment
        formulas on the discretized kernel. Intended as a test oracle and
        for truncation diagnostics.
        """
        if t_index is None:
            t_index = self.n
        ku = t_index * self.trunc.u_refine + 1
        wts = np.full(ku, self.du)
        wts[0] = wts[-1] = self.du / 2.0
        g = self.kernel[:ku]
        b = (g * wts[:, None]).T @ g
        dg = self.widths
        outer = b * self.sqrt_widths[None, :] * self.sqrt_widths[:, None]
        var_near = 2.0 * (np.sum(outer**2) - np.sum(np.diag(b) ** 2 * dg**2))
        mbar = (wts[:, None] * g).sum(axis=0)
        var_cross = 4.0 * self.var_far * np.sum(mbar**2 * dg)
        t = t_index * self.dt
        var_far = 2.0 * t * t * self.var_far**2
        return self.prefactor**2 * (var_near + var_cross + var_far)


def generate_rosenblatt(hurst: float, n: int, dt: float, rng: RngStream,
                        trunc: Optional[TruncationConfig] = None) -> NoisePath:
    """Rosenblatt process path, normalized so that E[R_1^2] = 1.

    Non-Gaussian (skewed marginals), self-similar with index H, and with
    the same covariance function as normalized fBm at the same H. See
    :class:`RosenblattSampler` for the discretization; memory use is
    bounded by ``trunc.mem_cap_bytes`` and exceeding it raises
    :class:`~ewscale.errors.SizingError` before any allocation.
    """
    _check_n_dt(n, dt)
    if n == 0:
        return NoisePath(dt=dt, values=np.zeros(1), increments=np.zeros(0),
                         method="double-wiener")
    sampler = RosenblattSampler(hurst, n, dt, trunc)
    values = sampler.sample_values(rng.generator())
    return NoisePath(dt=dt, values=values, increments=np.diff(values),
                     method="double-wiener")


def write_path_csv(path: NoisePath, stream: TextIO) -> None:
    """Write ``t,value`` rows at full double precision (17 significant digits)."""
    stream.write("t,value\n")
    t = path.t
    for k in range(len(path.values)):
        stream.write(f"{t[k]:.17g},{path.values[k]:.17g}\n")
