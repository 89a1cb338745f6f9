"""Command-line entry point: simulate, synth, fit, phase-sweep."""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import shutil
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__, presets
from ._accel import backend
from .analysis import DEFAULT_GAMMA_H, adiabatic_reference, gain_curve_family, phase_sweep, write_sweep
from .errors import ConfigError, HubbleRingError
from .fit import FitVariant, GLOBAL_NAMES, ParamVector, ensemble_fit, global_fit, combine, write_report
from .integrator import accumulated_phase, integrate, seed_state
from .model import PhononState, RampProfile, hubble_rate, omega, peak_time, radius
from .synth import Dataset, TraceSpec, build_dataset, preset_specs

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NOCONVERGE = 0, 2, 3, 4


class NotConverged(Exception):
    pass


# -- config helpers ----------------------------------------------------------

def load_config(path):
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    return doc


def _params(cfg, preset=None):
    base = presets.PARAMS.get(preset or cfg.get("preset"), presets.CONTRACTION)
    try:
        return base.replace(**(cfg.get("params") or {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad params: {exc}") from exc


def _profile(d):
    if not isinstance(d, dict):
        raise ConfigError("profile must be a mapping")
    d = dict(d)
    try:
        if "t_i" in d:
            t_i = d.pop("t_i")
            return RampProfile.from_t_i(d.pop("R_start"), d.pop("R_end"), t_i,
                                        d.pop("rise_10_90", presets.RISE_10_90))
        return RampProfile(**d)
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"bad profile: {exc}") from exc


def _grid(d, default=(0.0, 150.0, 1501)):
    if d is None:
        return np.linspace(*default[:2], int(default[2]))
    if isinstance(d, dict):
        try:
            return np.linspace(float(d["start"]), float(d["stop"]), int(d["num"]))
        except KeyError as exc:
            raise ConfigError(f"grid needs start/stop/num: missing {exc}") from exc
    return np.asarray(d, dtype=float)


def _check_keys(cfg, allowed, section):
    unknown = set(cfg) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {section} config: {sorted(unknown)}")


def _copy_config(path, cfg, out):
    target = out / "config.yaml"
    if path is not None:
        shutil.copyfile(path, target)
    else:
        with open(target, "w") as fh:
            yaml.safe_dump(cfg, fh, sort_keys=True)


def _fmt(x):
    return f"{x:.10g}"


# -- commands ----------------------------------------------------------------

def cmd_simulate(cfg, args, out):
    _check_keys(cfg, {"preset", "params", "profile", "N_series", "init", "undamped", "t_grid"},
                "simulate")
    preset = args.preset or cfg.get("preset")
    params = _params(cfg, preset)
    if "profile" in cfg:
        profile = _profile(cfg["profile"])
    elif preset:
        profile = presets.preset_profile(preset.split("-", 1)[1])
    else:
        raise ConfigError("simulate needs a profile or a preset")
    undamped = bool(cfg.get("undamped", False))
    N_series = cfg.get("N_series")
    t = _grid(cfg.get("t_grid"))
    if "init" in cfg:
        init = PhononState(float(cfg["init"]["phi"]), float(cfg["init"]["dphi_dt"]), float(t[0]))
    else:
        init = seed_state(params, profile, t0=float(t[0]), undamped=undamped)
    traj = integrate(params, profile, N_series, init, t, undamped=undamped)
    traj.to_table(out / "trajectory.tsv")
    summary = {}
    if profile.is_constant:
        summary["ramp"] = "none"
    else:
        tp = peak_time(profile)
        rate = abs(float(hubble_rate(profile, tp)))
        w_pk = float(omega(params, radius(profile, tp)))
        summary.update({
            "t_peak": _fmt(tp),
            "max_abs_hubble_rate": _fmt(rate),
            "rate_over_omega": _fmt(rate / w_pk),
            "phi_peak_over_pi": _fmt(accumulated_phase(params, profile, N_series, tp) / math.pi),
        })
    with open(out / "summary.yaml", "w") as fh:
        yaml.safe_dump(summary, fh, sort_keys=True)
    for k, v in summary.items():
        print(f"{k}: {v}")
    return {"seed": None}


def _custom_specs(cfg, params, seed):
    specs = []
    for i, d in enumerate(cfg["traces"]):
        d = dict(d)
        try:
            prof = _profile(d.pop("profile"))
            t = _grid(d.pop("t_samples", None))
            N = d.pop("N_series", None)
            N = np.array([[0.0, params.N_ref]]) if N is None else np.asarray(N, float)
            specs.append(TraceSpec(
                trace_id=str(d.pop("trace_id", f"trace_{i:02d}")), profile=prof, t_samples=t,
                N_series=N, theta_bins=int(d.pop("theta_bins", cfg.get("theta_bins", 64))),
                noise_sigma=float(d.pop("noise_sigma", cfg.get("noise_sigma", 0.0))),
                seed=seed, kind=d.pop("kind", "")))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad trace {i}: {exc}") from exc
        if d:
            raise ConfigError(f"unknown keys in trace {i}: {sorted(d)}")
    return specs


def cmd_synth(cfg, args, out):
    _check_keys(cfg, {"preset", "params", "noise_sigma", "seed", "theta_bins", "n_samples",
                      "t_max", "atom_loss", "drift", "traces", "name"}, "synth")
    preset = args.preset or cfg.get("preset")
    params = _params(cfg, preset)
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if "traces" in cfg:
        specs = _custom_specs(cfg, params, 0 if seed is None else int(seed))
        name = cfg.get("name", "custom")
    elif preset:
        kw = {k: cfg[k] for k in ("noise_sigma", "theta_bins", "n_samples", "t_max",
                                  "atom_loss", "drift") if k in cfg}
        specs = preset_specs(preset, params, **kw)
        name = preset
    else:
        raise ConfigError("synth needs a preset or a traces list")
    if any(s.noise_sigma > 0 for s in specs) and seed is None:
        raise ConfigError("a seed is required when noise_sigma > 0")
    seed = 0 if seed is None else int(seed)
    ds = build_dataset(params, specs, seeds=[seed] * len(specs), name=name)
    ds.save(out / "dataset")
    print(f"traces: {len(ds)}  cells: {ds.n_cells}  seed: {seed}")
    return {"seed": seed}


def _variants(spec):
    if spec is None or spec == "all":
        return FitVariant.all()
    if isinstance(spec, dict):
        return [FitVariant(**spec)]
    if isinstance(spec, str):
        return [FitVariant.from_name(spec)]
    return [FitVariant.from_name(s) if isinstance(s, str) else FitVariant(**s) for s in spec]


def cmd_fit(cfg, args, out):
    _check_keys(cfg, {"dataset", "variant", "start", "n_prior_sigma", "max_iter"}, "fit")
    if "dataset" not in cfg:
        raise ConfigError("fit needs a dataset path")
    ds_path = Path(cfg["dataset"])
    if not ds_path.is_absolute() and args.config is not None:
        ds_path = Path(args.config).parent / ds_path
    if not (ds_path / "manifest.yaml").is_file():
        raise ConfigError(f"no dataset manifest under {ds_path}")
    ds = Dataset.load(ds_path)
    try:
        variants = _variants(args.variant or cfg.get("variant", "all"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    start = cfg.get("start", "auto")
    pv0 = None
    if start == "truth":
        if ds.truth is None:
            raise ConfigError("dataset has no generating parameters")
        pv0 = ParamVector.from_params(ds.truth, variants[0], ds)
    elif isinstance(start, dict):
        base = ds.truth if ds.truth is not None else presets.CONTRACTION
        start = dict(start)
        scale = 1.0 + float(start.pop("perturb", 0.0))
        g = {k: getattr(base, k) * scale for k in GLOBAL_NAMES}
        g.update(start)
        try:
            pv0 = ParamVector.from_params(base.replace(**g), variants[0], ds)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad start: {exc}") from exc
    elif start != "auto":
        raise ConfigError(f"unknown start {start!r}")
    opts = dict(n_prior_sigma=float(cfg.get("n_prior_sigma", 0.01)))
    if len(variants) == 1:
        res = global_fit(ds, variants[0], pv0, max_iter=int(cfg.get("max_iter", 500)), **opts)
        obj = combine([res])
        results = [res]
    else:
        obj = ensemble_fit(ds, pv0, variants, **opts)
        results = obj.per_variant
    write_report(obj if len(variants) > 1 else results[0], out / "report.txt", out / "report.json")
    for r in results:
        print(f"{r.variant.name}: free={len(r.x)} chi2={r.chi2:.6g} dof={r.dof} "
              f"converged={r.converged}")
    for k in GLOBAL_NAMES:
        print(f"{k}: {obj.mean_params[k]:.6g} +- {obj.combined_sigma[k]:.3g}")
    if not all(r.converged for r in results):
        raise NotConverged
    return {"seed": sorted({int(tr.spec.seed) for tr in ds.traces})}


def cmd_phase_sweep(cfg, args, out):
    _check_keys(cfg, {"preset", "params", "profile", "gamma_H", "n_points", "phi_range", "t_i",
                      "adiabatic", "adiabatic_gamma_H", "undamped", "n_periods"}, "phase-sweep")
    preset = args.preset or cfg.get("preset")
    params = _params(cfg, preset)
    tpl = (_profile(cfg["profile"]) if "profile" in cfg
           else RampProfile.from_t_i(params.R_i_ref, params.R_f_ref, 38.2))
    undamped = bool(cfg.get("undamped", False))
    written = []
    if "t_i" in cfg:
        pts = phase_sweep(params, tpl, t_i_list=[float(x) for x in cfg["t_i"]], undamped=undamped)
        write_sweep(out / "sweep.tsv", pts)
        written.append("sweep.tsv")
    else:
        lo, hi = cfg.get("phi_range", [1.0, 3.0])
        n = int(cfg.get("n_points", 200))
        fam = gain_curve_family(params, cfg.get("gamma_H", list(DEFAULT_GAMMA_H)), n,
                                (lo * math.pi, hi * math.pi), tpl, undamped)
        for g, pts in fam.items():
            name = f"sweep_gammaH_{g:g}.tsv"
            write_sweep(out / name, pts)
            written.append(name)
        if cfg.get("adiabatic", True):
            grid = [p.phi_peak for p in next(iter(fam.values()))]
            # the slow-ramp reference uses the theory value gamma_H = alpha unless overridden
            slow = params.replace(gamma_H=float(cfg.get("adiabatic_gamma_H", params.alpha)))
            ratios = [adiabatic_reference(slow, tpl.R_start, tpl.R_end,
                                          float(cfg.get("n_periods", 100)), phi_0=phi)
                      for phi in grid]
            rows = np.column_stack([np.array(grid) / math.pi, ratios])
            np.savetxt(out / "adiabatic.tsv", rows, fmt="%.10g", delimiter="\t",
                       header="phi_peak/pi\tratio")
            written.append("adiabatic.tsv")
    for w in written:
        print(f"wrote {w}")
    return {"seed": None}


COMMANDS = {
    "simulate": cmd_simulate,
    "synth": cmd_synth,
    "fit": cmd_fit,
    "phase-sweep": cmd_phase_sweep,
}


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out, args, cfg, extra, wall):
    import scipy

    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "run_manifest.json")
    doc = {
        "command": args.command,
        "config": cfg,
        "config_sha256": None if args.config is None else _sha256(args.config),
        "flags": {"preset": args.preset, "seed": args.seed, "variant": args.variant},
        "seed": extra.get("seed"),
        "versions": {
            "hubblering": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "backend": backend(),
        },
        "wall_time_s": wall,
        "outputs": {str(p.relative_to(out)): _sha256(p) for p in files},
    }
    with open(out / "run_manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)


def build_parser():
    parser = argparse.ArgumentParser(prog="hubblering", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?", help="YAML run configuration")
        p.add_argument("--output", "-o", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--variant", default=None, help="fit variant name or 'all'")
        p.add_argument("--preset", default=None, choices=sorted(presets.PARAMS))
        p.add_argument("--manifest", action="store_true", help="write run_manifest.json")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        if args.config is None and args.preset is None:
            raise ConfigError("a config file or --preset is required")
        cfg = load_config(args.config)
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        _copy_config(args.config, cfg, out)
        extra = COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotConverged:
        print("fit did not converge; report written", file=sys.stderr)
        if args.manifest:
            write_manifest(out, args, cfg, {}, time.perf_counter() - t0)
        return EXIT_NOCONVERGE
    except (HubbleRingError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.manifest:
        write_manifest(out, args, cfg, extra, time.perf_counter() - t0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
