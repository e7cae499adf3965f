import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from velsel import observables as obs
from velsel.physics import RB85
from velsel.potential import PotentialConfig, barrier_for_depth, find_well_geometry

K = RB85.k_B


def test_profile_counts_and_overflow():
    x = np.array([-2.0, -0.5, 0.0, 0.5, 3.0])
    p = obs.density_profile(x, np.linspace(-1, 1, 5))
    assert p.counts.sum() == 3 and p.underflow == 1 and p.overflow == 1
    assert p.normalization == 3
    assert np.allclose(p.centers, [-0.75, -0.25, 0.25, 0.75])
    with pytest.raises(ValueError):
        obs.density_profile([])
    with pytest.raises(ValueError):
        obs.density_profile(x, 0)


def test_default_binning():
    x = np.random.default_rng(0).normal(0, 1e-4, 10_000)
    p = obs.density_profile(x)
    assert len(p.counts) == 200
    assert p.bin_edges[-1] - p.bin_edges[0] == pytest.approx(12 * x.std())
    assert p.width == pytest.approx(x.std(), rel=0.01)


@given(T=st.floats(0.1e-6, 100e-6), s0=st.floats(1e-6, 1e-3))
def test_tof_fit_recovers_exact_widths(T, s0):
    times = np.array([5e-3, 10e-3, 15e-3, 20e-3])
    widths = np.sqrt(s0 ** 2 + K * T / RB85.mass * times ** 2)
    T_fit, s_fit, resid = obs.fit_temperature_tof(widths, times)
    assert T_fit == pytest.approx(T, rel=1e-6)
    assert s_fit == pytest.approx(s0, rel=1e-4)


def test_tof_fit_on_sampled_cloud():
    rng = np.random.default_rng(3)
    T = 2e-6
    z0 = rng.normal(0, 50e-6, 200_000)
    v = rng.normal(0, math.sqrt(K * T / RB85.mass), z0.size)
    times = [5e-3, 10e-3, 15e-3, 20e-3]
    profiles = [obs.density_profile(z0 + v * t, time=t) for t in times]
    T_fit, _, _ = obs.fit_temperature_tof(profiles, times)
    assert T_fit == pytest.approx(T, rel=0.03)
    with pytest.raises(ValueError):
        obs.fit_temperature_tof(profiles[:1], times[:1])


def test_pseudo_temperatures():
    v = np.array([0.01, -0.01])
    assert obs.pseudo_temperature(v) == pytest.approx(RB85.mass * 1e-4 / K)
    assert obs.pseudo_temperature_time_averaged(v ** 2) == pytest.approx(RB85.mass * 1e-4 / K)
    with pytest.raises(ValueError):
        obs.pseudo_temperature([])
    with pytest.raises(ValueError):
        obs.pseudo_temperature_time_averaged([])


def test_measure_efficiency_window():
    Up = 2.782e-25
    cfg = PotentialConfig(Up, barrier_for_depth(8e-6 * K, Up))
    geom = find_well_geometry(cfg)
    lo, hi = obs.efficiency_window(geom, cfg, 0.5e-3)
    z = np.array([lo - 1e-6, lo + 1e-6, 0.5 * (lo + hi), hi + 1e-6])
    assert obs.measure_efficiency(z, geom, cfg) == 0.5
    with pytest.raises(ValueError, match="exceeds"):
        obs.measure_efficiency(z, geom, cfg, domain=(lo + 1e-6, hi))
    absent = PotentialConfig(Up, 0.0)
    assert obs.measure_efficiency(z, find_well_geometry(absent), absent) == 0.0
    flat = PotentialConfig(0.0, 1e-29)
    with pytest.raises(ValueError, match="unbounded"):
        obs.measure_efficiency(z, find_well_geometry(flat), flat)


def test_deconvolution_round_trip():
    # flat velocities on [-v_m, v_m] convolved with a Gaussian initial cloud
    rng = np.random.default_rng(1)
    n, v_m, t = 1_000_000, 0.02, 20e-3
    z = rng.normal(0, 40e-6, n)
    v = rng.uniform(-v_m, v_m, n)
    edges = obs.default_edges(z + v * t)
    est = obs.deconvolve_velocity(obs.density_profile(z + v * t, edges),
                                  obs.density_profile(z, edges), t, eps=1e-2)
    dv = est.velocities[1] - est.velocities[0]
    truth = np.where(np.abs(est.velocities) <= v_m, 0.5 / v_m, 0.0)
    assert np.sum(np.abs(est.density - truth)) * dv < 0.10
    assert est.mass_within(1.1 * v_m) > 0.99
    var = np.sum(est.density * est.velocities ** 2) * dv
    assert var == pytest.approx(v_m ** 2 / 3, rel=0.05)
    assert np.sum(est.raw_density) * dv == pytest.approx(1.0)


def test_deconvolution_guards():
    e1 = np.linspace(0, 1, 11)
    a = obs.density_profile([0.5], e1)
    with pytest.raises(ValueError, match="share bin edges"):
        obs.deconvolve_velocity(a, obs.density_profile([0.5], np.linspace(0, 2, 11)), 1.0)
    with pytest.raises(ValueError):
        obs.deconvolve_velocity(a, a, 0.0)
    # a box kernel has exact spectral zeros: unregularized division refuses
    box = obs.density_profile(np.linspace(0.05, 0.45, 5), e1)
    with pytest.raises(ValueError, match="raise eps"):
        obs.deconvolve_velocity(a, box, 1.0, eps=0.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.005, 0.05))
def test_cutoff_metrics_shapes(v_m):
    v = np.linspace(-2 * v_m, 2 * v_m, 4001)
    flat = np.where(np.abs(v) <= v_m, 1.0, 0.0)
    tri = np.clip(1 - np.abs(v) / v_m, 0, None)
    assert obs.cutoff_metrics(v, flat, v_m) == pytest.approx({"tail_fraction": 0.0, "shape_score": 1.0}, abs=1e-3)
    assert obs.cutoff_metrics(v, tri, v_m)["shape_score"] == pytest.approx(1 / 3, abs=0.01)
    samples = np.random.default_rng(0).uniform(-v_m, v_m, 100_000)
    assert obs.cutoff_metrics_from_samples(samples, v_m)["shape_score"] == pytest.approx(1.0, abs=0.03)
    assert obs.cutoff_metrics_from_samples(samples * 1.5, v_m)["tail_fraction"] == pytest.approx(
        1 - 1.1 / 1.5, abs=0.01)


def test_profile_csv(tmp_path):
    p = obs.density_profile([0.1, 0.2, 0.2], np.array([0.0, 0.15, 0.3]))
    path = tmp_path / "p.csv"
    p.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["bin_center", "value"]
    # full-precision round trip
    assert [float(r[0]) for r in rows[1:]] == list(p.centers)
    assert [float(r[1]) for r in rows[1:]] == [1.0, 2.0]
