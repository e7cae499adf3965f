import csv
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from velsel import ensemble as ens
from velsel.physics import RB85
from velsel.potential import (PotentialConfig, barrier_for_depth, find_well_geometry,
                              potential_energy)
from velsel.theory import CloudSpec

K = RB85.k_B
UP = 7.419e-25
CFG = PotentialConfig(UP, barrier_for_depth(2e-6 * K, UP))
GEOM = find_well_geometry(CFG)


def plain_verlet(z, v, cfg, dt, n):
    """Reference velocity Verlet, one step at a time, no shortcuts."""
    z, v = np.array(z, float), np.array(v, float)
    m = RB85.mass
    from velsel.potential import force
    a = force(z, cfg) / m
    for _ in range(n):
        v_half = v + 0.5 * dt * a
        z = z + dt * v_half
        a = force(z, cfg) / m
        v = v_half + 0.5 * dt * a
    return z, v


def test_sample_moments():
    cloud = CloudSpec(26e-6, 400e-6, center=1e-4, count=200_000)
    e = ens.sample_cloud(cloud, seed=1)
    n = cloud.count
    sigma = RB85.thermal_speed(26e-6)
    assert abs(e.positions.mean() - 1e-4) < 5 * 400e-6 / math.sqrt(n)
    assert e.positions.std() == pytest.approx(400e-6, rel=5 * math.sqrt(0.5 / n))
    assert abs(e.velocities.mean()) < 5 * sigma / math.sqrt(n)
    assert e.velocities.std() == pytest.approx(sigma, rel=5 * math.sqrt(0.5 / n))
    assert abs(np.corrcoef(e.positions, e.velocities)[0, 1]) < 5 / math.sqrt(n)
    assert np.all(e.tags == ens.UNCLASSIFIED)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**63), n=st.integers(1, 3000), workers=st.integers(1, 7))
def test_sampling_independent_of_workers_and_count(seed, n, workers):
    cloud = CloudSpec(26e-6, 160e-6, count=n)
    a = ens.sample_cloud(cloud, seed)
    b = ens.sample_cloud(cloud, seed, workers=workers)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.velocities, b.velocities)
    # counter-based: atom i's draws do not depend on how many atoms exist
    c = ens.sample_cloud(CloudSpec(26e-6, 160e-6, count=n + 17), seed)
    assert np.array_equal(c.positions[:n], a.positions)


def test_different_seeds_differ_and_negative_rejected():
    cloud = CloudSpec(26e-6, 160e-6, count=100)
    assert not np.array_equal(ens.sample_cloud(cloud, 0).positions, ens.sample_cloud(cloud, 1).positions)
    with pytest.raises(ValueError):
        ens.sample_cloud(cloud, -1)


def test_classification_rule():
    e = ens.sample_cloud(CloudSpec(26e-6, 400e-6, count=50_000), 5)
    c = ens.classify(e, CFG, GEOM)
    E = ens.energy(e.positions, e.velocities, CFG)
    E_top = potential_energy(GEOM.z_top, CFG)
    trapped = c.tags == ens.TRAPPED
    assert np.all(E[trapped] < E_top) and np.all(e.positions[trapped] > GEOM.z_top)
    rest = ~trapped
    assert np.all((E[rest] >= E_top) | (e.positions[rest] <= GEOM.z_top))
    assert set(np.unique(c.tags)) <= {ens.TRAPPED, ens.ESCAPED}
    assert np.array_equal(c.trapped, trapped)


def test_classify_preconditions():
    e = ens.sample_cloud(CloudSpec(26e-6, 400e-6, count=10), 0)
    with pytest.raises(ValueError):
        ens.classify(ens.free_expansion(e, 1e-3), CFG, GEOM)
    no_well = PotentialConfig(1e-22, 1e-30)
    with pytest.raises(ValueError):
        ens.classify(e, no_well, find_well_geometry(no_well))


def test_equilibrium_atom_stays_put():
    e = ens.AtomEnsemble(np.array([GEOM.z_min]), np.array([0.0]), np.array([1], np.int8), 0)
    out, _ = ens.integrate(e, CFG, ens.IntegratorConfig())
    assert abs(out.positions[0] - GEOM.z_min) < 1e-12


def test_matches_plain_verlet():
    # atoms inside and far outside the barrier zone (the latter take the
    # exact constant-force shortcut)
    z0 = np.array([GEOM.z_min, GEOM.z_min + 10e-6, -5e-6, 2e-3, -1e-3, 60e-6])
    v0 = np.array([0.01, -0.005, 0.02, -0.1, 0.05, -0.08])
    e = ens.AtomEnsemble(z0, v0, np.zeros(6, np.int8), 0)
    icfg = ens.IntegratorConfig(dt=1e-6, t_total=3e-3)
    out, _ = ens.integrate(e, CFG, icfg)
    z_ref, v_ref = plain_verlet(z0, v0, CFG, icfg.dt, icfg.n_steps)
    np.testing.assert_allclose(out.positions, z_ref, rtol=0, atol=1e-11)
    np.testing.assert_allclose(out.velocities, v_ref, rtol=0, atol=1e-9)
    assert out.time == pytest.approx(3e-3)


def test_integration_independent_of_workers():
    e = ens.sample_cloud(CloudSpec(26e-6, 400e-6, count=3000), 2)
    icfg = ens.IntegratorConfig(dt=1e-6, t_total=2e-3, record_stride=10)
    a, ta = ens.integrate(e, CFG, icfg, record=np.arange(0, 3000, 7))
    b, tb = ens.integrate(e, CFG, icfg, record=np.arange(0, 3000, 7), workers=4)
    assert np.array_equal(a.positions, b.positions) and np.array_equal(a.velocities, b.velocities)
    assert np.array_equal(ta.positions, tb.positions) and np.array_equal(ta.mean_v2, tb.mean_v2)


def test_trapped_energy_conserved():
    e = ens.classify(ens.sample_cloud(CloudSpec(26e-6, 400e-6, count=20_000), 4), CFG, GEOM)
    sub = e.subset(e.trapped)
    out, traj = ens.integrate(sub, CFG, ens.IntegratorConfig(record_stride=50),
                              record=np.arange(len(sub)))
    E0 = ens.energy(sub.positions, sub.velocities, CFG)
    Et = ens.energy(traj.positions, traj.velocities, CFG)
    assert np.max(np.abs(Et - E0[:, None])) < 1e-5 * GEOM.U0
    # bounded error: halving dt cuts it roughly four-fold
    out2, _ = ens.integrate(sub, CFG, ens.IntegratorConfig(dt=0.5e-6))
    d1 = np.max(np.abs(ens.energy(out.positions, out.velocities, CFG) - E0))
    d2 = np.max(np.abs(ens.energy(out2.positions, out2.velocities, CFG) - E0))
    assert 2.5 < d1 / d2 < 6


def test_time_averaged_v2_of_free_fall():
    # far from the barrier: v(t) = v0 - g t, so <v^2> has a closed form
    e = ens.AtomEnsemble(np.array([5e-3]), np.array([0.03]), np.zeros(1, np.int8), 0)
    icfg = ens.IntegratorConfig(dt=1e-6, t_total=10e-3)
    _, traj = ens.integrate(e, CFG, icfg)
    g = UP / RB85.mass
    t = icfg.t_total
    v0 = 0.03
    exact = v0 ** 2 - v0 * g * t + (g * t) ** 2 / 3
    assert traj.mean_v2[0] == pytest.approx(exact, rel=1e-3)


def test_coarse_step_warns():
    e = ens.AtomEnsemble(np.array([GEOM.z_min]), np.array([0.0]), np.zeros(1, np.int8), 0)
    with pytest.warns(RuntimeWarning, match="under-resolves"):
        ens.integrate(e, CFG, ens.IntegratorConfig(dt=2e-4, t_total=1e-3))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ens.integrate(e, CFG, ens.IntegratorConfig(dt=1e-6, t_total=1e-4))


def test_free_expansion():
    e = ens.AtomEnsemble(np.array([0.0, 1.0]), np.array([1.0, -2.0]), np.zeros(2, np.int8), 0)
    f = ens.free_expansion(e, 0.5)
    assert np.array_equal(f.positions, [0.5, 0.0]) and f.time == 0.5
    with pytest.raises(ValueError):
        ens.free_expansion(e, -1.0)


def test_oscillation_count_on_sinusoids():
    t = np.linspace(0, 1, 20_001)
    pos = np.vstack([np.sin(2 * np.pi * 3 * t + 0.3), np.sin(2 * np.pi * 5 * t + 1.0)])
    assert ens.oscillation_count(pos, 0.0) == pytest.approx(4.0, abs=0.51)
    assert ens.oscillation_count(pos, 0.0, subset=[0]) == pytest.approx(3.0, abs=0.51)
    # jitter inside the deadband is not counted
    assert ens.oscillation_count(1e-12 * pos, 0.0) == 0.0
    with pytest.raises(ValueError):
        ens.oscillation_count(np.zeros((0, 5)), 0.0)


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        ens.IntegratorConfig(dt=0)
    with pytest.raises(ValueError):
        ens.IntegratorConfig(t_total=-1)
    with pytest.raises(ValueError):
        ens.IntegratorConfig(record_stride=0)
    assert ens.IntegratorConfig().n_steps == 20_000


def test_snapshot_csv(tmp_path):
    e = ens.classify(ens.sample_cloud(CloudSpec(26e-6, 400e-6, count=5), 0), CFG, GEOM)
    p = tmp_path / "snap.csv"
    e.to_csv(p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["index", "z_m", "v_mps", "tag"]
    assert len(rows) == 6
    assert float(rows[3][1]) == e.positions[2]
