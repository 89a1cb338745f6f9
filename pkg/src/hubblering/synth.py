"""Synthetic angular density-perturbation datasets."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import presets
from .integrator import n_at, n_series, seed_state, unit_basis
from .model import ModelParams, RampProfile, density_from_phase, radius

KINDS = ("expansion", "contraction", "constant-R")


@dataclass
class TraceSpec:
    trace_id: str
    profile: RampProfile
    t_samples: np.ndarray
    N_series: np.ndarray
    theta_bins: int = 64
    noise_sigma: float = 0.0
    seed: int = 0
    kind: str = ""

    def __post_init__(self):
        self.t_samples = np.asarray(self.t_samples, dtype=float)
        self.N_series = np.atleast_2d(np.asarray(self.N_series, dtype=float))
        if not self.kind:
            p = self.profile
            self.kind = ("constant-R" if p.is_constant
                         else "expansion" if p.R_end > p.R_start else "contraction")
        if self.kind not in KINDS:
            raise ValueError(f"unknown trace kind {self.kind!r}")
        if self.theta_bins < 8:
            raise ValueError("theta_bins must be >= 8")
        if len(self.t_samples) == 0 or np.any(np.diff(self.t_samples) <= 0):
            raise ValueError("t_samples must be non-empty and increasing")
        if self.t_samples[0] < 0:
            raise ValueError("t_samples must be non-negative")
        n_series(self.N_series)  # validates
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    @property
    def theta(self):
        return 2 * np.pi * np.arange(self.theta_bins) / self.theta_bins

    def N_at(self, t):
        return n_at(self.N_series, t)

    def to_dict(self):
        return {
            "trace_id": self.trace_id,
            "kind": self.kind,
            "profile": {k: float(v) for k, v in self.profile.to_dict().items()},
            "t_samples": [float(t) for t in self.t_samples],
            "N_series": [[float(t), float(n)] for t, n in self.N_series],
            "theta_bins": int(self.theta_bins),
            "noise_sigma": float(self.noise_sigma),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["profile"] = RampProfile.from_dict(d["profile"])
        return cls(**d)


@dataclass
class Trace:
    spec: TraceSpec
    matrix: np.ndarray  # (theta_bins, len(t_samples))


@dataclass
class Dataset:
    traces: list
    R_i_ref: float
    R_f_ref: float
    N_ref: float = 1.0
    name: str = ""
    truth: ModelParams | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [t.spec.trace_id for t in self.traces]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate trace identifiers")
        for tr in self.traces:
            if tr.matrix.shape != (tr.spec.theta_bins, len(tr.spec.t_samples)):
                raise ValueError(f"matrix shape mismatch for trace {tr.spec.trace_id}")

    def __len__(self):
        return len(self.traces)

    @property
    def ramp_kinds(self):
        return sorted({t.spec.kind for t in self.traces} - {"constant-R"})

    @property
    def n_cells(self):
        return sum(t.matrix.size for t in self.traces)

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        entries = []
        for tr in self.traces:
            fname = f"{tr.spec.trace_id}.tsv"
            write_matrix(directory / fname, tr.spec.t_samples, tr.matrix)
            entry = tr.spec.to_dict()
            entry["file"] = fname
            entries.append(entry)
        doc = {
            "name": self.name,
            "R_i_ref": float(self.R_i_ref),
            "R_f_ref": float(self.R_f_ref),
            "N_ref": float(self.N_ref),
            "truth": None if self.truth is None else self.truth.to_dict(),
            "meta": self.meta,
            "traces": entries,
        }
        with open(directory / "manifest.yaml", "w") as fh:
            yaml.safe_dump(doc, fh, sort_keys=False)

    @classmethod
    def load(cls, directory):
        directory = Path(directory)
        with open(directory / "manifest.yaml") as fh:
            doc = yaml.safe_load(fh)
        traces = []
        for entry in doc["traces"]:
            entry = dict(entry)
            fname = entry.pop("file")
            spec = TraceSpec.from_dict(entry)
            _, mat = read_matrix(directory / fname)
            traces.append(Trace(spec, mat))
        truth = doc.get("truth")
        return cls(
            traces=traces,
            R_i_ref=doc["R_i_ref"],
            R_f_ref=doc["R_f_ref"],
            N_ref=doc.get("N_ref", 1.0),
            name=doc.get("name", ""),
            truth=None if truth is None else ModelParams.from_dict(truth),
            meta=doc.get("meta") or {},
        )


def write_matrix(path, t_samples, matrix):
    """Rows are time samples (first column t), remaining columns theta bins."""
    header = "t\t" + "\t".join(f"theta_{j}" for j in range(matrix.shape[0]))
    data = np.column_stack([t_samples, matrix.T])
    np.savetxt(path, data, fmt="%.10g", delimiter="\t", header=header)


def read_matrix(path):
    data = np.loadtxt(path, delimiter="\t", ndmin=2)
    return data[:, 0], np.ascontiguousarray(data[:, 1:].T)


def trace_dn(params: ModelParams, spec: TraceSpec, undamped=False):
    """Signed envelope series dn(t_k) including the N(t)/N_ref factor.

    Built from the two unit-initial-state solutions, the same route the fit
    model takes, so noiseless data and model agree to rounding.
    """
    t = spec.t_samples
    grid = t if t[0] == 0.0 else np.concatenate([[0.0], t])
    N0 = float(n_at(spec.N_series, 0.0))
    init = seed_state(params, spec.profile, N0=N0, undamped=undamped)
    basis = unit_basis(params, spec.profile, spec.N_series, grid, undamped)[len(grid) - len(t):]
    dn = density_from_phase(params, radius(spec.profile, t), basis @ [init.phi, init.dphi_dt])
    return dn * n_at(spec.N_series, t) / params.N_ref


def forward_trace(params: ModelParams, spec: TraceSpec, undamped=False):
    dn = trace_dn(params, spec, undamped)
    ang = np.sin(params.m * spec.theta + params.dtheta)
    return ang[:, None] * dn[None, :]


def add_noise(matrix, noise_sigma, seed, trace_index=0):
    """Gaussian noise from a Philox stream keyed by (seed, trace_index).

    Cell (j, k) always draws the same counter position, so output does not
    depend on generation order.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    matrix = np.asarray(matrix, dtype=float)
    if noise_sigma == 0:
        return matrix.copy()
    bitgen = np.random.Philox(key=np.array([int(seed), int(trace_index)], dtype=np.uint64))
    noise = np.random.Generator(bitgen).standard_normal(matrix.shape)
    return matrix + noise_sigma * noise


def build_dataset(params: ModelParams, specs, seeds=None, name="") -> Dataset:
    if not specs:
        raise ValueError("specs must be non-empty")
    if seeds is not None:
        if len(seeds) != len(specs):
            raise ValueError("one seed per spec required")
        for s, seed in zip(specs, seeds):
            s.seed = int(seed)
    traces = []
    for idx, spec in enumerate(specs):
        clean = forward_trace(params, spec)
        traces.append(Trace(spec, add_noise(clean, spec.noise_sigma, spec.seed, idx)))
    return Dataset(traces, params.R_i_ref, params.R_f_ref, params.N_ref, name=name, truth=params)


def preset_specs(name, params=None, noise_sigma=None, seed=0, theta_bins=64,
                 n_samples=45, t_max=150.0, atom_loss=0.10, drift=0.05):
    """Trace specs mirroring the experiment's dataset composition.

    Ramp traces lose ``atom_loss`` of their atoms across the ramp; the
    initial atom number drifts linearly by +-``drift`` across the dataset.
    """
    if name == "paper-contraction":
        kind, (lo, hi), n_ramp = "contraction", presets.T_I_CONTRACTION, presets.N_CONTRACTION
    elif name == "paper-expansion":
        kind, (lo, hi), n_ramp = "expansion", presets.T_I_EXPANSION, presets.N_EXPANSION
    else:
        raise ValueError(f"unknown preset {name!r}")
    params = presets.PARAMS[name] if params is None else params
    sigma = 0.05 * params.dn_i if noise_sigma is None else noise_sigma
    t = np.linspace(0.0, t_max, n_samples)

    profiles = [presets.preset_profile(kind, t_i) for t_i in np.linspace(lo, hi, n_ramp)]
    profiles += [RampProfile.constant(float(R))
                 for R in np.linspace(presets.R_SMALL, presets.R_LARGE, presets.N_CONSTANT)]
    total = len(profiles)
    specs = []
    for k, prof in enumerate(profiles):
        n0 = 1.0 + drift * (2.0 * k / (total - 1) - 1.0)
        if prof.is_constant:
            N = np.full_like(t, n0)
            tid = f"const_{k - n_ramp:02d}"
        else:
            frac = (radius(prof, t) - prof.R_start) / (prof.R_end - prof.R_start)
            N = n0 * (1.0 - atom_loss * frac)
            tid = f"{kind[:4]}_{k:02d}"
        specs.append(TraceSpec(
            trace_id=tid, profile=prof, t_samples=t.copy(),
            N_series=np.column_stack([t, N * params.N_ref]),
            theta_bins=theta_bins, noise_sigma=sigma, seed=seed,
        ))
    return specs


def build_preset(name, params=None, seed=0, **kw) -> Dataset:
    params = presets.PARAMS[name] if params is None else params
    specs = preset_specs(name, params, seed=seed, **kw)
    return build_dataset(params, specs, name=name)
