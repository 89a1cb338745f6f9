"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line PASS/FAIL verdict that pytest prints in the
"acceptance criteria" summary section. Tolerances are the contract values;
failing criteria are left failing.
"""
import math
import os
import time

import numpy as np
import pytest
import yaml

from conftest import ACCEPTANCE_LINES
from hubblering import presets
from hubblering.analysis import (
    adiabatic_reference, adiabatic_scaling, gain_curve_family, phase_sweep, slow_profile,
)
from hubblering.cli import main
from hubblering.fit import GLOBAL_NAMES, FitVariant, ParamVector, ensemble_fit, global_fit
from hubblering.integrator import (
    adiabatic_invariant, analytic_constant_R_series, integrate, seed_state, wronskian_invariant,
)
from hubblering.model import PhononState, RampProfile, hubble_rate, omega, peak_time, radius
from hubblering.synth import build_preset

N_REALIZATIONS = int(os.environ.get("HUBBLERING_ACCEPT_REALIZATIONS", "50"))


def verdict(num, title, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {num} {'PASS' if ok else 'FAIL'}: {title}; {detail}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def test_criterion_1_analytic_oracle():
    t0 = time.perf_counter()
    p = presets.EXPANSION
    t = np.linspace(0, 150, 3001)
    init = PhononState(1.0, 0.0)
    tr = integrate(p, RampProfile.constant(11.9), None, init, t)
    an = analytic_constant_R_series(p, 11.9, 1.0, init, t)
    err = float(np.max(np.abs(tr.phi - an[0])))
    dt = time.perf_counter() - t0
    ok = err <= 1e-8 and dt < 1.0
    assert verdict(1, "constant-R versus closed form", ok,
                   f"max abs error {err:.2e} (<= 1e-8), {dt:.3f} s (< 1 s)")


def test_criterion_2_invariants():
    t0 = time.perf_counter()
    p = presets.CONTRACTION
    prof = presets.preset_profile("contraction", 38.2)
    t = np.linspace(0, 150, 1501)
    w = wronskian_invariant(p, prof, PhononState(1.0, 0.0), PhononState(0.0, 1.0), t)
    drift = float(np.max(np.abs(w / w[0] - 1)))

    init = PhononState(0.3, -0.8, 0.0)
    fwd = integrate(p, prof, None, init, np.array([0.0, 150.0]), undamped=True)
    back = integrate(p, prof, None, PhononState(fwd.phi[-1], fwd.dphi_dt[-1], 150.0),
                     np.array([150.0, 0.0]), undamped=True)
    rev = max(abs(back.phi[-1] - init.phi), abs(back.dphi_dt[-1] - init.dphi_dt))

    slow = slow_profile(p, 38.4, 11.9, 100.0)
    t_end = 2 * slow.t_mid
    ts = np.linspace(0, t_end, 200_001)
    tr = integrate(p, slow, None, seed_state(p, slow, undamped=True), ts, undamped=True)
    inv = adiabatic_invariant(tr, p, slow)
    T0 = 2 * math.pi / float(omega(p, 38.4))
    T1 = 2 * math.pi / float(omega(p, 11.9))
    before = inv[ts < T0].mean()
    after = inv[ts >= t_end - T1].mean()
    adi = abs(after / before - 1)
    dt = time.perf_counter() - t0
    ok = drift <= 1e-7 and rev <= 1e-7 and adi <= 5e-3 and dt < 10
    assert verdict(2, "undamped invariants", ok,
                   f"Wronskian drift {drift:.1e}, reversal {rev:.1e}, "
                   f"adiabatic drift {adi:.2e}, {dt:.2f} s")


def test_criterion_3_adiabatic_scaling():
    p = presets.CONTRACTION.replace(gamma_H=presets.CONTRACTION.alpha)
    expected = adiabatic_scaling(38.4, 11.9, 0.52)
    phases = np.linspace(0.0, math.pi, 6)
    vals = np.array([adiabatic_reference(p, 38.4, 11.9, 100.0, phi_0=x) for x in phases])
    rel = abs(vals.mean() / expected - 1)
    spread = vals.std() / vals.mean()
    ok = rel <= 0.01 and spread <= 5e-3
    assert verdict(3, "adiabatic contraction ratio", ok,
                   f"ratio {vals.mean():.5f} vs {expected:.5f} (rel {rel:.1e}), "
                   f"phase spread {spread:.1e}")


def test_criterion_4_kinematics():
    p = presets.CONTRACTION
    prof = presets.preset_profile("contraction", 38.2)
    tp = peak_time(prof)
    rate = abs(float(hubble_rate(prof, tp)))
    R_peak = float(radius(prof, tp))
    ratio = rate / float(omega(p, R_peak))
    ok_rate = abs(rate / 0.328 - 1) <= 0.10
    ok_ratio = abs(ratio / 1.53 - 1) <= 0.10
    assert verdict(4, "contraction kinematics", ok_rate and ok_ratio,
                   f"max |dR/dt/R| {rate * 1e3:.1f} 1/s (328 +-10%: {ok_rate}), "
                   f"rate/omega(t_peak) {ratio:.3f} at R={R_peak:.2f} um "
                   f"(1.53 +-10%: {ok_ratio})")


def _start(ds):
    truth = presets.CONTRACTION
    off = truth.replace(**{k: 1.2 * getattr(truth, k) for k in GLOBAL_NAMES})
    return ParamVector.from_params(off, FitVariant.all()[0], ds)


@pytest.mark.slow
def test_criterion_5_synthetic_recovery():
    truth = presets.CONTRACTION
    bands = {"gamma_H": 0.05, "alpha": 0.03, "Q_i": 0.4}
    est = {k: [] for k in bands}
    covered = {k: 0 for k in bands}
    within = 0
    t0 = time.perf_counter()
    for seed in range(N_REALIZATIONS):
        ds = build_preset("paper-contraction", seed=seed)
        ens = ensemble_fit(ds, _start(ds))
        inside = True
        for k, tol in bands.items():
            v, s = ens.mean_params[k], ens.combined_sigma[k]
            est[k].append(v)
            covered[k] += abs(v - getattr(truth, k)) <= s
            inside &= abs(v - getattr(truth, k)) <= tol
        within += inside
    dt = time.perf_counter() - t0
    n = N_REALIZATIONS
    mean = {k: float(np.mean(v)) for k, v in est.items()}
    cov = {k: covered[k] / n for k in bands}
    ok_bias = all(abs(mean[k] - getattr(truth, k)) <= bands[k] for k in bands)
    ok_each = within == n
    ok_cov = all(c >= 0.90 for c in cov.values())
    detail = (", ".join(f"{k} mean {mean[k]:.4f}" for k in bands)
              + f"; in-band {within}/{n}; coverage "
              + ", ".join(f"{k} {cov[k]:.0%}" for k in bands) + f"; {dt / 60:.1f} min")
    assert verdict(5, "synthetic contraction recovery", ok_bias and ok_each and ok_cov, detail)


def test_criterion_6_parameter_count():
    ds = build_preset("paper-contraction", seed=0)
    res = global_fit(ds, FitVariant(True, True, False), _start(ds))
    ok = len(res.x) == 32
    assert verdict(6, "all-shared free parameters", ok,
                   f"{len(res.x)} free parameters on {len(ds)} traces (expected 32)")


def test_criterion_7_gain_family():
    p = presets.CONTRACTION
    fam = gain_curve_family(p, (0.0, 0.36, 1.0), n_points=200)
    r = {g: np.array([x.ratio for x in pts]) for g, pts in fam.items()}
    swing = {g: (v.max() - v.min()) / v.mean() for g, v in r.items()}
    means = {g: v.mean() for g, v in r.items()}
    ordered = swing[0.0] > swing[1.0] and means[1.0] > means[0.36] > means[0.0]
    pts = phase_sweep(p, presets.preset_profile("contraction"), t_i_list=[27.0, 70.0])
    lo, hi = pts[0].phi_peak / math.pi, pts[1].phi_peak / math.pi
    ok_window = abs(lo / 1.3 - 1) <= 0.10 and abs(hi / 2.9 - 1) <= 0.10
    ok = ordered and swing[0.0] > 0.20 and ok_window
    assert verdict(7, "gain curve family", ok,
                   f"peak-to-trough/mean {swing[0.0]:.2f}/{swing[0.36]:.2f}/{swing[1.0]:.2f}, "
                   f"means {means[0.0]:.2f}/{means[0.36]:.2f}/{means[1.0]:.2f}, "
                   f"window {lo:.3f}pi to {hi:.3f}pi")


def _tree(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*"))
            if p.is_file()}


def test_criterion_8_determinism(tmp_path):
    def cfg(name, doc):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(doc))
        return str(path)

    synth_cfg = cfg("synth.yaml", {"preset": "paper-contraction", "seed": 11,
                                   "theta_bins": 16, "n_samples": 36})
    main(["synth", synth_cfg, "-o", str(tmp_path / "ds")])
    runs = {
        "simulate": ["simulate", "--preset", "paper-contraction"],
        "synth": ["synth", synth_cfg],
        "fit": ["fit", cfg("fit.yaml", {"dataset": str(tmp_path / "ds" / "dataset"),
                                        "variant": "phi0shared-dthetashared-Nseries"})],
        "phase-sweep": ["phase-sweep", cfg("ps.yaml", {"preset": "paper-contraction",
                                                      "n_points": 5, "n_periods": 100})],
    }
    same = {}
    for name, argv in runs.items():
        codes = [main(argv + ["-o", str(tmp_path / f"{name}_{i}")]) for i in (0, 1)]
        same[name] = (codes == [0, 0]
                      and _tree(tmp_path / f"{name}_0") == _tree(tmp_path / f"{name}_1"))
    ok = all(same.values())
    assert verdict(8, "byte-identical reruns", ok,
                   ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in same.items()))
