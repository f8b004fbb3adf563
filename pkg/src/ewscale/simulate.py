"""Euler-Maruyama ensembles for the noisy fast-slow systems.

Integrates x' = f(x, y) + sigma * C'_t, y' = slow_rate over ensembles of
paths. White and coloured forcing are streamed (the coloured case evolves
the Ornstein-Uhlenbeck state with its exact transition inside the step
loop); fBm and Rosenblatt paths are pre-generated whole because their
increments are dependent.

Reproducibility contract: path i draws only from stream i of the master
seed, every per-path computation uses per-path-shaped arrays, and the
Euler-Maruyama update is elementwise over the batch, so results are bit
identical for any worker count, batch layout, or ensemble growth (the
first M paths of a larger run reproduce the M-path run exactly).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParameterError
from .models import ModelKind, ModelSpec, attracting_branch, drift
from .noise import (FgnSampler, NoiseKind, NoiseSpec, RngStream,
                    RosenblattSampler, TruncationConfig)

__all__ = [
    "SimConfig",
    "PathRecord",
    "EnsembleStats",
    "integrate_path",
    "run_ensemble",
    "detect_jump",
    "euler_maruyama",
]

_CHUNK = 8192         # fixed streaming chunk (steps); constant so draw order never varies
_STREAM_BATCH = 4096  # path-batch cap for streamed noise (memory only, not results)
_PRE_BYTES = 2**30    # memory budget for pre-generated increment batches


@dataclass(frozen=True)
class SimConfig:
    """Ensemble configuration.

    ``t_end / dt`` must be integral. ``record_stride`` subsamples the
    stored trajectory; ``jump_delta`` is the branch-distance threshold used
    to exclude paths from the variance once they leave the attracting
    neighbourhood, and ``blowup_bound`` terminates numerically exploding
    paths. ``keep_paths`` retains the first K full records for dumping.
    """

    model: ModelSpec
    noise: NoiseSpec
    x0: float
    y0: float
    dt: float
    t_end: float
    n_paths: int
    master_seed: int
    record_stride: int = 10
    jump_delta: float = 0.3
    blowup_bound: float = 1e3
    keep_paths: int = 0
    trunc: Optional[TruncationConfig] = None

    def __post_init__(self):
        if not (self.dt > 0) or not (self.t_end > 0):
            raise ParameterError("dt and t_end must be positive")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ParameterError(
                f"t_end/dt = {steps!r} must be a positive integer")
        if self.n_paths < 1:
            raise ParameterError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.record_stride < 1:
            raise ParameterError("record_stride must be >= 1")
        if not (self.jump_delta >= 0):
            raise ParameterError("jump_delta must be >= 0")
        RngStream(self.master_seed)  # validates the seed range

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class PathRecord:
    """Subsampled (t, x, y) trajectory of one path.

    y is affine in t with slope slow_rate, exactly. ``jump_time`` is the
    first recorded exit from the attracting neighbourhood (or numerical
    blow-up), if any.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    jump_time: Optional[float] = None


@dataclass
class EnsembleStats:
    """Per-time ensemble statistics over not-yet-jumped paths.

    ``variance`` is NaN wherever fewer than two paths survive (absent, not
    zero). ``paths`` holds the first ``keep_paths`` full records.
    """

    t: np.ndarray
    y: np.ndarray
    variance: np.ndarray
    n_survivors: np.ndarray
    paths: list[PathRecord] = field(default_factory=list)


def _record_indices(n_steps: int, stride: int) -> np.ndarray:
    ks = np.arange(0, n_steps + 1, stride)
    if ks[-1] != n_steps:
        ks = np.append(ks, n_steps)
    return ks


def euler_maruyama(drift_fn, x0: np.ndarray, dt: float, increments: np.ndarray,
                   y0: float = 0.0, slow_rate: float = 0.0) -> np.ndarray:
    """Bare Euler-Maruyama over pre-supplied forcing increments.

    ``drift_fn(x, y)`` is elementwise; ``increments`` has shape
    (n_paths, n_steps) and already includes the noise intensity. Returns
    the full (n_paths, n_steps + 1) state array. Utility for convergence
    studies; the ensemble driver streams noise instead of storing it.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    incr = np.atleast_2d(increments)
    n = incr.shape[1]
    out = np.empty((len(x0), n + 1))
    out[:, 0] = x0
    x = x0.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            y = y0 + slow_rate * (k * dt)
            x = x + drift_fn(x, y) * dt + incr[:, k]
            out[:, k + 1] = x
    return out


def _prepare_batch_noise(cfg: SimConfig, gens: list[np.random.Generator],
                         sampler) -> Optional[np.ndarray]:
    """Pre-generate whole-path forcing increments (dependent-increment noises)."""
    kind = cfg.noise.kind
    if kind not in (NoiseKind.FBM, NoiseKind.ROSENBLATT):
        return None
    pre = np.empty((len(gens), cfg.n_steps))
    for i, g in enumerate(gens):
        if kind is NoiseKind.FBM:
            pre[i] = sampler.sample(g)
        else:
            pre[i] = np.diff(sampler.sample_values(g))
    return pre


def _integrate_batch(cfg: SimConfig, streams: list[RngStream], sampler,
                     record_ks: np.ndarray) -> np.ndarray:
    """Integrate one batch of paths; returns recorded x of shape (batch, n_rec)."""
    model = cfg.model
    kind = cfg.noise.kind
    nb = len(streams)
    n = cfg.n_steps
    dt = cfg.dt
    sigma = model.sigma
    slow_rate = model.slow_rate
    gens = [s.generator() for s in streams]

    pre = _prepare_batch_noise(cfg, gens, sampler)

    if kind is NoiseKind.COLOURED:
        tau = cfg.noise.tau
        phi = math.exp(-dt / tau)
        s_ou = math.sqrt(0.5 * tau * (1.0 - phi * phi))
        b = np.array([math.sqrt(0.5 * tau) * g.standard_normal() for g in gens])
    sq_dt = math.sqrt(dt)

    x = np.full(nb, float(cfg.x0))
    out = np.empty((nb, len(record_ks)))
    rec_set = {int(k): i for i, k in enumerate(record_ks)}
    if 0 in rec_set:
        out[:, rec_set[0]] = x
    bound = cfg.blowup_bound

    with np.errstate(over="ignore", invalid="ignore"):
        k_global = 0
        while k_global < n:
            m = min(_CHUNK, n - k_global)
            if kind is NoiseKind.WHITE or kind is NoiseKind.COLOURED:
                z = np.stack([g.standard_normal(m) for g in gens])
            for j in range(m):
                y = cfg.y0 + slow_rate * (k_global * dt)
                f = drift(model, x, y)
                if kind is NoiseKind.WHITE:
                    dc = sq_dt * z[:, j]
                elif kind is NoiseKind.COLOURED:
                    b_next = phi * b + s_ou * z[:, j]
                    dc = b_next - b
                    b = b_next
                else:
                    dc = pre[:, k_global]
                x = x + f * dt + sigma * dc
                k_global += 1
                idx = rec_set.get(k_global)
                if idx is not None:
                    np.copyto(x, np.nan, where=np.abs(x) > bound)
                    out[:, idx] = x
    return out


def _branch_trace(model: ModelSpec, y_rec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Attracting-branch values over the recorded y grid, with validity mask."""
    y_star = model.y_star
    side = model.attracting_side
    valid = side * (y_rec - y_star) > 0
    branch = np.full(len(y_rec), np.nan)
    for i in np.nonzero(valid)[0]:
        branch[i] = attracting_branch(model, float(y_rec[i]))
    return branch, valid


def _jump_indices(x_rec: np.ndarray, y_rec: np.ndarray, branch: np.ndarray,
                  valid: np.ndarray, delta: float) -> np.ndarray:
    """First record index at which each path counts as jumped.

    Jump = branch distance >= delta (or non-finite state) while the slow
    variable is still on the attracting side, else the first index where
    y has crossed the bifurcation. Returns len(record) when no jump.
    """
    n_rec = x_rec.shape[1]
    dist = np.abs(x_rec - branch[None, :])
    bad = (~np.isfinite(x_rec)) | (dist >= delta)
    bad &= valid[None, :]
    crossed = np.nonzero(~valid)[0]
    first_cross = crossed[0] if len(crossed) else n_rec
    idx = np.where(bad.any(axis=1), bad.argmax(axis=1), n_rec)
    return np.minimum(idx, first_cross)


def detect_jump(path: PathRecord, model: ModelSpec, delta: float) -> Optional[float]:
    """First time the path leaves the attracting neighbourhood.

    Returns the first recorded time with |x - h0(y)| >= delta while y is
    on the attracting side, or the first recorded time with y at/past the
    bifurcation, or None if neither occurs. delta = 0 degenerates to an
    immediate jump at t = 0.
    """
    if not (delta >= 0):
        raise ParameterError(f"delta must be >= 0, got {delta}")
    branch, valid = _branch_trace(model, path.y)
    idx = _jump_indices(path.x[None, :], path.y, branch, valid, delta)[0]
    if idx >= len(path.t):
        return None
    return float(path.t[idx])


def integrate_path(config: SimConfig, rng_stream: RngStream) -> PathRecord:
    """Integrate a single path; bit-identical to the same path in an ensemble."""
    record_ks = _record_indices(config.n_steps, config.record_stride)
    sampler = _make_sampler(config)
    x = _integrate_batch(config, [rng_stream], sampler, record_ks)[0]
    t = record_ks * config.dt
    y = config.y0 + config.model.slow_rate * t
    rec = PathRecord(t=t, x=x, y=y)
    rec.jump_time = detect_jump(rec, config.model, config.jump_delta)
    return rec


def _make_sampler(config: SimConfig):
    if config.noise.kind is NoiseKind.FBM:
        return FgnSampler(config.noise.hurst, config.n_steps, config.dt)
    if config.noise.kind is NoiseKind.ROSENBLATT:
        return RosenblattSampler(config.noise.hurst, config.n_steps, config.dt,
                                 config.trunc)
    return None


def run_ensemble(config: SimConfig, n_workers: int = 1) -> EnsembleStats:
    """Monte Carlo ensemble of ``n_paths`` paths (stream index = path index).

    The per-time sample variance is taken over paths that have not yet
    jumped (see :func:`detect_jump`); times with fewer than two survivors
    report NaN. Output is independent of ``n_workers``.
    """
    record_ks = _record_indices(config.n_steps, config.record_stride)
    t_rec = record_ks * config.dt
    y_rec = config.y0 + config.model.slow_rate * t_rec
    m = config.n_paths
    n_rec = len(record_ks)
    sampler = _make_sampler(config)

    if config.noise.kind in (NoiseKind.FBM, NoiseKind.ROSENBLATT):
        batch = max(64, min(m, _PRE_BYTES // (8 * config.n_steps)))
    else:
        batch = min(m, _STREAM_BATCH)
    x_rec = np.empty((m, n_rec))
    batches = [(lo, min(lo + batch, m)) for lo in range(0, m, batch)]

    def work(span):
        lo, hi = span
        streams = [RngStream(config.master_seed, i) for i in range(lo, hi)]
        x_rec[lo:hi] = _integrate_batch(config, streams, sampler, record_ks)

    if n_workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(work, batches))
    else:
        for span in batches:
            work(span)

    branch, valid = _branch_trace(config.model, y_rec)
    jump_idx = _jump_indices(x_rec, y_rec, branch, valid, config.jump_delta)
    alive = np.arange(n_rec)[None, :] < jump_idx[:, None]

    counts = alive.sum(axis=0)
    variance = _masked_variance(x_rec, alive, counts)

    paths = []
    for i in range(min(config.keep_paths, m)):
        rec = PathRecord(t=t_rec, x=x_rec[i].copy(), y=y_rec)
        rec.jump_time = None if jump_idx[i] >= n_rec else float(t_rec[jump_idx[i]])
        paths.append(rec)

    return EnsembleStats(t=t_rec, y=y_rec, variance=variance,
                         n_survivors=counts.astype(int), paths=paths)


def _masked_variance(x: np.ndarray, alive: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Corrected two-pass sample variance per column over the alive mask
    (ddof = 1). The (sum of deviations)^2 / n correction cancels the
    rounding of the mean, so identical paths give exactly zero."""
    with np.errstate(invalid="ignore", divide="ignore"):
        keep = alive & np.isfinite(x)
        safe = np.where(keep, x, 0.0)
        mean = safe.sum(axis=0) / counts
        dev = np.where(keep, x - mean[None, :], 0.0)
        ss = (dev * dev).sum(axis=0) - dev.sum(axis=0) ** 2 / counts
        var = ss / (counts - 1)
    var[counts < 2] = np.nan
    return var
