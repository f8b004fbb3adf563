"""Command-line entry point.

Subcommands: ``noise`` (write one sampled path), ``theory`` (tabulate
closed-form predictions or the critical manifold), ``simulate`` (run an
ensemble from a config file), ``fit`` (scaling fit of an ensemble CSV),
and ``repro`` (the four benchmark ocean-box experiments C1-C4 end to
end). Plot rendering stays out of process: every command emits plot-ready
CSV data.

Exit codes: 0 success, 2 parameter/validation error, 3 I/O error,
4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

import numpy as np

from . import csvio
from .analysis import Verdict, compare_to_theory, loglog_fit
from .config import ExperimentConfig
from .errors import EwscaleError, SizingError
from .models import (Bifurcation, ModelKind, ModelSpec, attracting_branch,
                     manifold_table, normal_form_linearization)
from .noise import (NoiseKind, NoiseSpec, RngStream, generate_brownian,
                    generate_fbm, generate_ou, generate_rosenblatt,
                    write_path_csv)
from .simulate import SimConfig, run_ensemble
from .theory import (scaling_exponent, v_infinity_coloured, v_infinity_volterra,
                     v_infinity_white)

DEFAULT_SEED = 20230

#: Benchmark cases: (noise factory, y0, dt, t_end, base paths, record stride,
#: fit bins, slope tolerance)
_REPRO_CASES = {
    "C1": (lambda: NoiseSpec.white(), 1.4, 1e-3, 45.0, 10_000, 10, 12, 0.10),
    "C2": (lambda: NoiseSpec.coloured(0.05), 1.4, 1e-3, 45.0, 10_000, 10, 12, 0.15),
    "C3": (lambda: NoiseSpec.fbm(0.9), 1.4, 1e-3, 45.0, 10_000, 10, 12, 0.15),
    "C4": (lambda: NoiseSpec.rosenblatt(0.9), 1.0642, 1e-2, 10.0, 1_000, 2, 8, 0.30),
}


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def _noise_spec_from_args(args) -> NoiseSpec:
    kind = NoiseKind(args.kind)
    tau = getattr(args, "tau", None)
    hurst = getattr(args, "hurst", None)
    if kind is NoiseKind.COLOURED:
        return NoiseSpec.coloured(0.05 if tau is None else tau)
    if kind in (NoiseKind.FBM, NoiseKind.ROSENBLATT):
        return NoiseSpec(kind, hurst=0.9 if hurst is None else hurst)
    return NoiseSpec.white()


def _cmd_noise(args) -> int:
    spec = _noise_spec_from_args(args)
    rng = RngStream(args.seed, args.stream)
    if spec.kind is NoiseKind.WHITE:
        path = generate_brownian(args.n, args.dt, rng)
    elif spec.kind is NoiseKind.COLOURED:
        path = generate_ou(spec.tau, args.n, args.dt, rng)
    elif spec.kind is NoiseKind.FBM:
        path = generate_fbm(spec.hurst, args.n, args.dt, rng)
    else:
        path = generate_rosenblatt(spec.hurst, args.n, args.dt, rng)
    out, close = _open_out(args.out)
    try:
        write_path_csv(path, out)
    finally:
        if close:
            out.close()
    return 0


def _cmd_theory(args) -> int:
    out, close = _open_out(args.out)
    try:
        if args.table == "manifold":
            kind = ModelKind(args.model)
            model = (ModelSpec.stommel_cessi(eta2=args.eta2, sigma=args.sigma)
                     if kind is ModelKind.STOMMEL_CESSI
                     else ModelSpec(kind, sigma=args.sigma))
            y = np.linspace(args.y_min, args.y_max, args.points)
            csvio.write_manifold_csv(out, manifold_table(model, y))
            return 0
        spec = _noise_spec_from_args(args)
        bif = Bifurcation(args.bifurcation)
        tau = args.tau if args.tau is not None else 0.05
        hurst = args.hurst if args.hurst is not None else 0.9
        y = np.linspace(args.y_min, args.y_max, args.points)
        a = np.array([normal_form_linearization(bif, yy) for yy in y])
        vw = np.array([v_infinity_white(args.sigma, aa) for aa in a])
        vc = np.array([v_infinity_coloured(args.sigma, tau, aa) for aa in a])
        vv = np.array([v_infinity_volterra(args.sigma, hurst, aa) for aa in a])
        csvio.write_theory_csv(out, y, vw, vc, vv, scaling_exponent(spec, bif))
        return 0
    finally:
        if close:
            out.close()


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    for override in args.set or []:
        key, _, value = override.partition("=")
        section, _, name = key.partition(".")
        cfg.set(section.strip(), name.strip(), value.strip())
    if args.seed is not None:
        cfg.set("sim", "master_seed", args.seed)
    return cfg


def _write_ensemble_outputs(stats, out_dir: str, prefix: str = "ensemble") -> str:
    os.makedirs(out_dir, exist_ok=True)
    ens_path = os.path.join(out_dir, f"{prefix}.csv")
    with open(ens_path, "w", encoding="utf-8", newline="\n") as fh:
        csvio.write_ensemble_csv(stats, fh)
    for i, rec in enumerate(stats.paths):
        with open(os.path.join(out_dir, f"path_{i:03d}.csv"), "w",
                  encoding="utf-8", newline="\n") as fh:
            csvio.write_path_dump_csv(rec, fh)
    return ens_path


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    stats = run_ensemble(cfg.sim_config(), n_workers=args.threads)
    out_dir = args.out_dir or cfg.get("analysis", "out_dir")
    path = _write_ensemble_outputs(stats, out_dir)
    print(f"wrote {path} ({len(stats.t)} records, "
          f"{int(stats.n_survivors[-1])} paths surviving at t_end)")
    return 0


def _fit_and_write(stats, y_star: float, window, bins: int, noise: NoiseSpec,
                   bifurcation: Bifurcation, tolerance: float, out_dir: str) -> tuple:
    fit = loglog_fit(stats, y_star, window, bins,
                     theoretical_exponent=scaling_exponent(noise, bifurcation))
    cmp_ = compare_to_theory(fit, noise, bifurcation, tolerance)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "fit.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        csvio.write_fit_csv(fh, noise.label(), bifurcation.value, fit, cmp_)
    with open(os.path.join(out_dir, "plotdata.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        csvio.write_plotdata_csv(fit, fh)
    return fit, cmp_


def _cmd_fit(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        stats = csvio.read_ensemble_csv(fh)
    noise = _noise_spec_from_args(args)
    bif = Bifurcation(args.bifurcation)
    fit, cmp_ = _fit_and_write(stats, args.y_star, (args.d_min, args.d_max),
                               args.bins, noise, bif, args.tolerance, args.out_dir)
    print(f"slope {fit.slope:+.4f} (theory {cmp_.theoretical_exponent:+.2f}, "
          f"R^2 {fit.r_squared:.3f}, verdict {fit.verdict.value}) "
          f"-> {'pass' if cmp_.passed else 'FAIL'}")
    if cmp_.note:
        print(cmp_.note)
    return 0


def _cmd_repro(args) -> int:
    noise_fn, y0, dt, t_end, m0, stride, bins, tol = _REPRO_CASES[args.case]
    noise = noise_fn()
    model = ModelSpec.stommel_cessi(eta2=7.5, epsilon=0.01, sigma=0.01)
    n_paths = max(4, int(round(m0 * args.scale)))
    sim = SimConfig(
        model=model, noise=noise, x0=attracting_branch(model, y0), y0=y0,
        dt=dt, t_end=t_end, n_paths=n_paths, master_seed=args.seed,
        record_stride=stride, keep_paths=min(100, n_paths),
    )
    stats = run_ensemble(sim, n_workers=args.threads)
    out_dir = os.path.join(args.out_dir, args.case)
    _write_ensemble_outputs(stats, out_dir)
    d_max = min(0.5, 0.98 * (y0 - model.y_star))
    fit, cmp_ = _fit_and_write(stats, model.y_star, (0.05, d_max), bins,
                               noise, Bifurcation.FOLD, tol, out_dir)
    print(f"{args.case} [{noise.label()}] M={n_paths}: slope {fit.slope:+.4f} "
          f"(theory {cmp_.theoretical_exponent:+.2f}, tol {tol}), "
          f"verdict {fit.verdict.value} -> {'pass' if cmp_.passed else 'FAIL'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="ewscale",
        description="Variance-based early warning signs under time-correlated noise",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                       help="master seed (all commands honor it)")

    p = sub.add_parser("noise", help="generate one noise path as t,value CSV")
    p.add_argument("--kind", required=True,
                   choices=[k.value for k in NoiseKind])
    p.add_argument("--tau", type=float, help="correlation time (coloured)")
    p.add_argument("--hurst", type=float, help="Hurst index (fbm/rosenblatt)")
    p.add_argument("--n", type=int, required=True, help="number of steps")
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", default="-", help="output file ('-' = stdout)")
    add_seed(p)
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("theory", help="tabulate closed-form predictions")
    p.add_argument("--table", choices=["variance", "manifold"], default="variance")
    p.add_argument("--kind", default="white",
                   choices=[k.value for k in NoiseKind])
    p.add_argument("--bifurcation", default="fold",
                   choices=[b.value for b in Bifurcation])
    p.add_argument("--model", default="stommel_cessi",
                   choices=[k.value for k in ModelKind],
                   help="model for the manifold table")
    p.add_argument("--eta2", type=float, default=7.5)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--tau", type=float, help="coloured correlation time")
    p.add_argument("--hurst", type=float, help="Hurst index")
    p.add_argument("--y-min", type=float, required=True)
    p.add_argument("--y-max", type=float, required=True)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--out", default="-")
    add_seed(p)
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("simulate", help="run an ensemble from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                   help="override a config value (repeatable)")
    p.add_argument("--out-dir", help="output directory (default from config)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=None,
                   help="override sim.master_seed")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="scaling fit of an ensemble CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--y-star", type=float, required=True)
    p.add_argument("--d-min", type=float, default=0.05)
    p.add_argument("--d-max", type=float, default=0.5)
    p.add_argument("--bins", type=int, default=12)
    p.add_argument("--kind", default="white", choices=[k.value for k in NoiseKind])
    p.add_argument("--tau", type=float)
    p.add_argument("--hurst", type=float)
    p.add_argument("--bifurcation", default="fold",
                   choices=[b.value for b in Bifurcation])
    p.add_argument("--tolerance", type=float, default=0.15)
    p.add_argument("--out-dir", default=".")
    add_seed(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("repro", help="reproduce a benchmark case end to end")
    p.add_argument("case", choices=sorted(_REPRO_CASES))
    p.add_argument("--scale", type=float, default=1.0,
                   help="path-count multiplier in (0, 1]")
    p.add_argument("--out-dir", default="repro_out")
    p.add_argument("--threads", type=int, default=1)
    add_seed(p)
    p.set_defaults(func=_cmd_repro)

    return top


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "scale", None) is not None and not (0 < args.scale <= 1):
        print("error: --scale must be in (0, 1]", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except SizingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except EwscaleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
