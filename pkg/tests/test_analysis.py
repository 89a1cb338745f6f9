import math

import numpy as np
import pytest

from hubblering import presets
from hubblering.analysis import (
    PhaseSweepPoint, adiabatic_reference, adiabatic_scaling, default_window, final_amplitude,
    gain_curve_family, initial_amplitude, phase_sweep, trace_final_amplitude, write_sweep,
)
from hubblering.errors import InsufficientData
from hubblering.integrator import integrate, seed_state
from hubblering.model import damping, omega, peak_time
from hubblering.synth import TraceSpec, build_dataset

P = presets.CONTRACTION


def envelope_oracle(params, profile, t1):
    """Amplitude of the post-ramp damped oscillation at t1 from (dn, d dn/dt)."""
    init = seed_state(params, profile)
    tr = integrate(params, profile, None, init, np.array([0.0, t1]))
    R = profile.R_end
    w = float(omega(params, R))
    g = float(damping(params, R))
    wd = math.sqrt(w * w - g * g)
    phi, dphi = tr.phi[-1], tr.dphi_dt[-1]
    dn = -R ** params.alpha * dphi
    ddn = -R ** params.alpha * (-2 * g * dphi - w * w * phi)
    return math.hypot(dn, (ddn + g * dn) / wd) * math.exp(g * (t1 - peak_time(profile)))


@pytest.mark.parametrize("t_i", [30.0, 38.2, 55.0])
def test_final_amplitude_matches_trajectory_envelope(t_i):
    prof = presets.preset_profile("contraction", t_i)
    spec = TraceSpec("c", prof, np.linspace(0, 150, 1501), [[0.0, 1.0]], theta_bins=16)
    tr = build_dataset(P, [spec]).traces[0]
    A, s = trace_final_amplitude(tr, P)
    assert A == pytest.approx(envelope_oracle(P, prof, prof.completion_time(1 - 1e-9)), rel=1e-3)
    assert s < 1e-3 * A


def test_window_shift_consistency(contraction):
    t = np.linspace(0, 150, 3001)
    dn = integrate(P, contraction, None, seed_state(P, contraction), t).dn
    w0 = default_window(P, contraction)
    period = 2 * math.pi / float(omega(P, contraction.R_end))
    A0, _ = final_amplitude(t, dn, P, contraction, window=w0)
    A1, _ = final_amplitude(t, dn, P, contraction, window=(w0[0] + period, w0[1] + period))
    assert A1 == pytest.approx(A0, rel=5e-3)


def test_final_amplitude_edge_cases(contraction):
    t = np.linspace(0, 150, 301)
    assert final_amplitude(t, np.zeros_like(t), P, contraction) == (0.0, 0.0)
    w0 = default_window(P, contraction)
    sparse = np.array([0.0, w0[0] + 0.1, w0[0] + 1.0, 149.0])
    with pytest.raises(InsufficientData):
        final_amplitude(sparse, np.ones(4), P, contraction)
    with pytest.raises(ValueError):
        final_amplitude(t, np.ones_like(t), P, contraction, window=(contraction.t_mid, 100.0))


def test_initial_amplitude_examples(contraction):
    tp = peak_time(contraction)
    assert initial_amplitude(P, contraction, undamped=True) == P.dn_i
    assert initial_amplitude(P, contraction, N0=0.8, t_peak=3.0, undamped=True) == \
        pytest.approx(0.8 * P.dn_i)
    q = P.replace(Q_i=3.5)
    g_i = float(omega(q, 38.4)) / (2 * 3.5)
    assert initial_amplitude(q, contraction) == pytest.approx(q.dn_i * math.exp(-g_i * tp),
                                                              rel=1e-13)


def test_damping_is_common_mode(contraction):
    # a pre-ramp delay of one full period leaves phi_peak (mod 2 pi) unchanged; damping
    # lowers A_i and A_f alike and the ratio stays put
    period = 2 * math.pi / float(omega(P, contraction.R_start))
    a, b = phase_sweep(P, contraction, t_i_list=[contraction.t_i, contraction.t_i + period])
    assert b.phi_peak - a.phi_peak == pytest.approx(2 * math.pi, rel=1e-9)
    A_a = initial_amplitude(P, contraction)
    shifted = contraction.__class__.from_t_i(contraction.R_start, contraction.R_end,
                                             contraction.t_i + period)
    A_b = initial_amplitude(P, shifted)
    assert A_b / A_a == pytest.approx(math.exp(-float(damping(P, 38.4)) * period), rel=1e-9)
    assert A_b / A_a < 0.95
    assert b.ratio == pytest.approx(a.ratio, rel=0.02)


def test_ratio_has_period_pi_without_damping(contraction):
    p = P.replace(gamma_H=0.0)
    grid = np.linspace(math.pi, 2 * math.pi, 9)
    lo = phase_sweep(p, contraction, phi_peak_grid=grid, undamped=True)
    hi = phase_sweep(p, contraction, phi_peak_grid=grid + math.pi, undamped=True)
    r_lo = np.array([x.ratio for x in lo])
    r_hi = np.array([x.ratio for x in hi])
    assert np.allclose(r_lo, r_hi, rtol=1e-6)
    assert np.allclose([x.phi_peak for x in lo], grid, atol=1e-9)


def test_hubble_term_flattens_gain(contraction):
    fam = gain_curve_family(P, (0.0, 0.36, 1.0), n_points=40)
    ratios = {g: np.array([x.ratio for x in pts]) for g, pts in fam.items()}
    swing = {g: (r.max() - r.min()) / r.mean() for g, r in ratios.items()}
    assert swing[0.0] > 0.20
    assert swing[0.0] > swing[0.36] > swing[1.0]
    assert ratios[0.0].mean() < ratios[0.36].mean() < ratios[1.0].mean()
    stacked = np.vstack([ratios[0.0], ratios[0.36], ratios[1.0]])
    assert np.all(np.diff(stacked, axis=0) > 0)
    grid = [x.phi_peak for x in fam[0.0]]
    assert grid[0] == pytest.approx(math.pi) and grid[-1] == pytest.approx(3 * math.pi)


def test_default_family_size():
    fam = gain_curve_family(P, n_points=3)
    assert sorted(fam) == [0.0, 0.36, 1.0]


def test_experimental_phase_window():
    pts = phase_sweep(P, presets.preset_profile("contraction"), t_i_list=[27.0, 70.0])
    assert pts[0].phi_peak / math.pi == pytest.approx(1.3, rel=0.10)
    assert pts[1].phi_peak / math.pi == pytest.approx(2.9, rel=0.10)
    assert [x.t_i for x in pts] == pytest.approx([27.0, 70.0])


def test_sweep_rejects_bad_requests(contraction):
    with pytest.raises(ValueError):
        phase_sweep(P, contraction)
    with pytest.raises(ValueError):
        phase_sweep(P, contraction, t_i_list=[], phi_peak_grid=[1.0])
    with pytest.raises(ValueError):
        phase_sweep(P, contraction, t_i_list=[])
    with pytest.raises(ValueError):
        PhaseSweepPoint(1.0, -0.5, 0.0, 0.0)


def test_adiabatic_scaling_values():
    assert adiabatic_scaling(38.4, 11.9, 2.0) == 1.0
    c = adiabatic_scaling(38.4, 11.9, 0.52)
    assert c == pytest.approx((11.9 / 38.4) ** -0.37, rel=1e-14)
    assert c == pytest.approx(1.54, abs=0.005)
    assert adiabatic_scaling(11.9, 38.4, 0.52) == pytest.approx(1 / c, rel=1e-14)


def test_adiabatic_reference_and_reciprocal():
    p = P.replace(gamma_H=P.alpha)
    c = adiabatic_reference(p)
    assert c == pytest.approx(adiabatic_scaling(38.4, 11.9, 0.52), rel=0.01)
    e = adiabatic_reference(p, 11.9, 38.4)
    assert e == pytest.approx(1 / c, rel=0.01)


def test_adiabatic_reference_phase_independent():
    p = P.replace(gamma_H=P.alpha)
    vals = np.array([adiabatic_reference(p, phi_0=x) for x in np.linspace(0, math.pi, 5)])
    assert vals.std() <= 5e-3 * vals.mean()


def test_write_sweep(tmp_path, contraction):
    pts = phase_sweep(P, contraction, t_i_list=[38.2])
    write_sweep(tmp_path / "s.tsv", pts)
    lines = (tmp_path / "s.tsv").read_text().splitlines()
    assert lines[0] == "# phi_peak/pi\tratio\tsigma\tt_i"
    assert len(lines) == 2
    row = [float(v) for v in lines[1].split("\t")]
    assert row[0] == pytest.approx(pts[0].phi_peak / math.pi, rel=1e-9)
