import math

import numpy as np
import pytest

from hubblering import presets
from hubblering.fit import slice_fit_matrix
from hubblering.integrator import analytic_constant_R_series
from hubblering.model import PhononState, RampProfile, damping, omega
from hubblering.synth import (
    Dataset, TraceSpec, add_noise, build_dataset, build_preset, forward_trace,
    preset_specs, trace_dn,
)

P = presets.CONTRACTION


def ring_spec(R=20.0, sigma=0.0, n=61, tid="ring"):
    t = np.linspace(0, 120, n)
    return TraceSpec(tid, RampProfile.constant(R), t, [[0.0, 1.0]], noise_sigma=sigma)


def test_columns_are_zero_mean_sines():
    spec = ring_spec()
    mat = forward_trace(P.replace(dtheta=0.0), spec)
    assert np.max(np.abs(mat.mean(axis=0))) <= 1e-13
    shape = np.sin(spec.theta)
    k = 7
    assert np.allclose(mat[:, k], shape * mat[1, k] / shape[1], atol=1e-13)


def test_constant_ring_envelope_decays():
    spec = ring_spec(R=25.0, n=241)
    dn = trace_dn(P, spec)
    w = float(omega(P, 25.0))
    g = float(damping(P, 25.0))
    wd = math.sqrt(w * w - g * g)
    expected = P.dn_i * np.exp(-g * spec.t_samples) * np.cos(wd * spec.t_samples + P.phi_0)
    assert np.max(np.abs(dn - expected)) <= 1e-8


def test_contraction_frequency_rises():
    ratio = float(omega(P, 11.9) / omega(P, 38.4))
    assert ratio == pytest.approx((38.4 / 11.9) ** (1 + P.alpha / 2), rel=1e-13)
    assert ratio == pytest.approx(4.4, rel=0.01)
    # measured from zero crossings of an undamped trace, before and after the ramp
    prof = presets.preset_profile("contraction", 60.0)
    t = np.linspace(0, 150, 30001)
    spec = TraceSpec("c", prof, t, [[0.0, 1.0]])
    dn = trace_dn(P, spec, undamped=True)

    def freq(sel):
        tt, yy = t[sel], dn[sel]
        z = np.where(np.sign(yy[:-1]) != np.sign(yy[1:]))[0]
        return math.pi * (len(z) - 1) / (tt[z[-1]] - tt[z[0]])

    f_before = freq(t < 50)
    f_after = freq(t > 80)
    assert f_after / f_before == pytest.approx(ratio, rel=0.02)


def test_slice_amplitude_recovers_envelope():
    spec = ring_spec()
    mat = forward_trace(P.replace(dtheta=0.3), spec)
    amp, _, _ = slice_fit_matrix(mat)
    assert np.max(np.abs(amp - np.abs(trace_dn(P, spec)))) <= 1e-10


def test_noise_identity_and_determinism():
    mat = np.arange(12.0).reshape(3, 4)
    same = add_noise(mat, 0.0, 1)
    assert np.array_equal(same, mat)
    a = add_noise(mat, 0.3, 9, 2)
    b = add_noise(mat, 0.3, 9, 2)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, add_noise(mat, 0.3, 10, 2))
    assert not np.array_equal(a, add_noise(mat, 0.3, 9, 3))


def test_noise_variance_large_sample():
    z = add_noise(np.zeros((1000, 1000)), 0.2, 3)
    assert z.var() == pytest.approx(0.04, rel=0.01)


def test_noise_independent_of_generation_order():
    specs = [ring_spec(R, 0.1, tid=f"r{i}") for i, R in enumerate((15.0, 25.0))]
    ds = build_dataset(P, specs, seeds=[4, 4])
    alone = build_dataset(P, [ring_spec(15.0, 0.1, tid="r0")], seeds=[4])
    assert np.array_equal(ds.traces[0].matrix, alone.traces[0].matrix)


def test_single_noiseless_trace_verbatim():
    spec = ring_spec()
    ds = build_dataset(P, [spec])
    assert np.array_equal(ds.traces[0].matrix, forward_trace(P, spec))


@pytest.mark.parametrize("name,count,n_ramp", [("paper-contraction", 24, 17),
                                               ("paper-expansion", 18, 11)])
def test_preset_composition(name, count, n_ramp):
    specs = preset_specs(name)
    assert len(specs) == count
    kinds = [s.kind for s in specs]
    assert kinds.count("constant-R") == 7
    assert len(set(kinds) - {"constant-R"}) == 1
    t_i = [s.profile.t_i for s in specs if s.kind != "constant-R"]
    lo, hi = presets.T_I_CONTRACTION if "contraction" in name else presets.T_I_EXPANSION
    assert len(t_i) == n_ramp
    assert min(t_i) == pytest.approx(lo) and max(t_i) == pytest.approx(hi)
    radii = sorted(s.profile.R_start for s in specs if s.kind == "constant-R")
    assert radii[0] == pytest.approx(11.9) and radii[-1] == pytest.approx(38.4)
    assert np.allclose(np.diff(radii), np.diff(radii)[0])


def test_preset_cell_count_near_experiment():
    ds = build_preset("paper-contraction", seed=0)
    assert 6e4 <= ds.n_cells <= 9e4


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        build_dataset(P, [ring_spec(tid="x"), ring_spec(R=30.0, tid="x")])


def test_spec_validation():
    with pytest.raises(ValueError):
        TraceSpec("a", RampProfile.constant(20.0), [0, 1], [[0, 1.0]], theta_bins=4)
    with pytest.raises(ValueError):
        TraceSpec("a", RampProfile.constant(20.0), [1, 0], [[0, 1.0]])
    with pytest.raises(ValueError):
        TraceSpec("a", RampProfile.constant(20.0), [0, 1], [[0, -1.0]])


def test_round_trip_and_byte_stability(tmp_path):
    ds = build_preset("paper-expansion", seed=5)
    ds.save(tmp_path / "a")
    back = Dataset.load(tmp_path / "a")
    assert len(back) == len(ds)
    assert back.truth == ds.truth
    for x, y in zip(ds.traces, back.traces):
        assert x.spec.trace_id == y.spec.trace_id
        assert x.spec.profile == y.spec.profile
        assert np.array_equal(x.spec.t_samples, y.spec.t_samples)
        assert np.array_equal(x.spec.N_series, y.spec.N_series)
        assert np.allclose(x.matrix, y.matrix, rtol=1e-9, atol=1e-12)
    back.save(tmp_path / "b")
    again = Dataset.load(tmp_path / "b")
    for x, y in zip(back.traces, again.traces):
        assert np.array_equal(x.matrix, y.matrix)
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_atom_number_scales_amplitude():
    t = np.linspace(0, 60, 121)
    prof = RampProfile.constant(20.0)
    lo = trace_dn(P, TraceSpec("a", prof, t, [[0.0, 0.5]]))
    hi = trace_dn(P, TraceSpec("b", prof, t, [[0.0, 1.0]]))
    # amplitude scales with N and the frequency with N**(alpha/2)
    w_lo = float(omega(P, 20.0, 0.5))
    g_lo = float(damping(P, 20.0, 0.5))
    ph = analytic_constant_R_series(P, 20.0, 0.5, PhononState(0.0, 0.0), t)  # zero sanity
    assert not np.any(ph[0])
    wd = math.sqrt(w_lo ** 2 - g_lo ** 2)
    expected = 0.5 * P.dn_i * np.exp(-g_lo * t) * np.cos(wd * t + P.phi_0)
    assert np.max(np.abs(lo - expected)) <= 1e-8
    assert abs(hi[0]) == pytest.approx(2 * abs(lo[0]), rel=1e-12)
