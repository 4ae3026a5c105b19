"""Experiment engine: determinism, aggregation, scenario construction."""

import math

import numpy as np
import pytest

from cftsim import mobility, simulator
from cftsim.config import load_config
from cftsim.connection import predict_connection_time
from cftsim.mac import throughput
from cftsim.simulator import (SweepResult, build_transfer_scenario,
                              capability_sweep, cluster_size_profile,
                              connection_time_sweep, max_transfer_volume,
                              rate_curve, run_sweep, throughput_sweep,
                              write_csv)

MB = 1_000_000.0


@pytest.fixture(scope="module")
def small_cfg():
    return load_config(overrides=[
        "experiments.comm_range_m=[100, 250]",
        "experiments.seeds=3",
    ])


def test_write_csv_fixed_format(tmp_path):
    res = SweepResult(header=["a", "b", "c"],
                      rows=[(5, "cft", 1.5), (np.int64(7), "x", 1.0 / 3.0)])
    p1, p2 = tmp_path / "one.csv", tmp_path / "two.csv"
    write_csv(str(p1), res)
    write_csv(str(p2), res)
    assert p1.read_text() == "a,b,c\n5,cft,1.500000\n7,x,0.333333\n"
    assert p1.read_bytes() == p2.read_bytes()


def test_vectorised_pair_times_match_scalar_prediction():
    gen = np.random.default_rng(77)
    r = 250.0
    for _ in range(200):
        dx = float(gen.uniform(-200.0, 200.0))
        dy = float(gen.choice([-10.0, -5.0, 5.0, 10.0]))
        dvx = float(-gen.uniform(33.4, 66.6))    # westbound minus eastbound
        want = predict_connection_time(dx, dy, dvx, 0.0, r)
        got = simulator._pair_connection_times(
            np.array([dx]), np.array([dy]), np.array([dvx]), r)
        assert got[0] == pytest.approx(want, rel=1e-9)


def test_rng_streams_are_stable_and_independent():
    a = simulator._rng(1, "connection", 5, 0).integers(1 << 30, size=4)
    b = simulator._rng(1, "connection", 5, 0).integers(1 << 30, size=4)
    c = simulator._rng(1, "capability", 5, 0).integers(1 << 30, size=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("sweep,value_name", [
    (connection_time_sweep, "avg_connection_time_s"),
    (capability_sweep, "avg_capability_bytes"),
])
def test_pair_sweep_rows_recompute_from_records(small_cfg, sweep, value_name):
    res = sweep(small_cfg)
    assert res.header[3] == value_name
    assert len(res.rows) == 2
    for row in res.rows:
        rec = res.records[(row[0],)]
        assert row[4] == len(rec) == 3
        assert row[3] == pytest.approx(np.mean(rec))
        assert row[3] > 0.0
    # longer range, longer chords: the mean grows with r
    assert res.rows[1][3] > res.rows[0][3]
    assert sweep(small_cfg).rows == res.rows     # bit-identical repeat


def test_connection_means_cap_at_the_horizon(small_cfg):
    res = connection_time_sweep(small_cfg)
    for row in res.rows:
        assert row[3] <= small_cfg.experiments.horizon_s


def test_throughput_sweep_is_analytic(default_cfg):
    res = throughput_sweep(default_cfg)
    e = default_cfg.experiments
    assert len(res.rows) == len(e.densities_per_km) * len(e.comm_ranges_m)
    for density, r_m, val in res.rows:
        params = default_cfg.mac_for(r_m, density)
        assert val == throughput(density / 1000.0, params,
                                 e.nominal_mac_rate_bps)
        assert 0.0 < val < e.nominal_mac_rate_bps


def test_rate_curve_spans_the_default_grid(default_cfg):
    res = rate_curve(default_cfg)
    assert res.header == ["distance_m", "expected_rate_bps"]
    assert len(res.rows) == 60                   # 10 m .. 600 m
    by_d = dict(res.rows)
    assert by_d[250.0] == pytest.approx(53_826_080.18, rel=1e-6)
    custom = rate_curve(default_cfg, distances_m=[50.0, 100.0])
    assert [d for d, _ in custom.rows] == [50.0, 100.0]


def _head_resource_distance(scen):
    head = scen.states[scen.head_vid]
    res = scen.states[scen.resource_vid]
    dx = mobility.ring_delta(head.x, res.x, scen.mobility_cfg.lane_length_m)
    return math.hypot(dx, res.y - head.y)


def test_transfer_scenario_is_deterministic(default_cfg):
    a = build_transfer_scenario(default_cfg, 5.0, 150.0, 250.0, 15, 3)
    b = build_transfer_scenario(default_cfg, 5.0, 150.0, 250.0, 15, 3)
    assert a.head_vid == b.head_vid
    assert a.resource_vid == b.resource_vid
    assert np.array_equal(a.trajectory.x, b.trajectory.x)
    assert np.array_equal(a.trajectory.speed, b.trajectory.speed)


def test_contact_request_catches_an_ongoing_pass(default_cfg):
    for seed in range(4):
        scen = build_transfer_scenario(default_cfg, 5.0, 150.0, 250.0, 15,
                                       seed, request_at="contact")
        head = scen.states[scen.head_vid]
        res = scen.states[scen.resource_vid]
        assert head.vx > 0.0 and res.vx < 0.0
        assert _head_resource_distance(scen) <= 250.0
        t_in, t_out = scen.trajectory.first_window(
            scen.head_vid, scen.resource_vid, 250.0)
        assert t_in == 0.0 and t_out > 0.0


def test_encounter_request_fires_as_the_resource_enters_range(default_cfg):
    for seed in range(4):
        scen = build_transfer_scenario(default_cfg, 5.0, 150.0, 250.0, 15,
                                       seed, request_at="encounter")
        head = scen.states[scen.head_vid]
        res = scen.states[scen.resource_vid]
        assert head.vx > 0.0 and res.vx < 0.0
        d = _head_resource_distance(scen)
        # Fresh contact: in range now, but by at most one step's closing
        # speed (2 * 33.33 m/s * 1 s).
        assert d <= 250.0
        assert d > 250.0 - 70.0


def test_transfer_scenario_rejects_unknown_request_modes(default_cfg):
    with pytest.raises(ValueError):
        build_transfer_scenario(default_cfg, 5.0, 150.0, 250.0, 15, 0,
                                request_at="whenever")


def test_trajectory_state_reads_the_step_grid(default_cfg):
    scen = build_transfer_scenario(default_cfg, 5.0, 150.0, 250.0, 15, 0)
    traj = scen.trajectory
    s0 = traj.state(scen.head_vid, 0.0)
    init = scen.states[scen.head_vid]
    assert (s0.x, s0.y, s0.vx) == (init.x, init.y, init.vx)
    assert traj.state(scen.resource_vid, 0.0).vx < 0.0
    beyond = traj.state(scen.head_vid, 1e9)      # clamps to the last step
    assert beyond.x == float(traj.x[-1, scen.head_vid])


def test_max_volume_schemes_and_aggregation():
    cfg = load_config(overrides=[
        "experiments.max_volume.density_per_km=[5]",
        "experiments.max_volume.seeds=4",
        "experiments.max_volume.direct_seeds=6",
    ])
    with pytest.raises(ValueError):
        max_transfer_volume(cfg, "bogus")
    for scheme, n in (("direct", 6), ("cft", 4)):
        res = max_transfer_volume(cfg, scheme)
        (row,) = res.rows
        assert row[0] == scheme and row[5] == n
        rec = res.records[(scheme, 5.0)]
        assert len(rec) == n
        # aggregate = largest volume still reached by success_fraction of runs
        need = math.ceil(cfg.experiments.success_fraction * n)
        assert row[4] == sorted(rec)[n - need]
        assert row[4] > 0.0
        assert row[4] % cfg.experiments.fragment_bytes == 0.0


def test_cluster_profile_recomputes_from_records():
    cfg = load_config(overrides=[
        "experiments.cluster_size.density_per_km=[10]",
        "experiments.cluster_size.seeds=4",
        "experiments.file_size_mb=[100, 400]",
    ])
    res = cluster_size_profile(cfg)
    assert len(res.rows) == 2
    for density, v_bytes, avg, n_formed in res.rows:
        rec = res.records[(density, v_bytes)]
        assert len(rec) == 4
        formed = [n for n in rec if n > 0]
        assert n_formed == len(formed)
        assert avg == pytest.approx(np.mean(formed) if formed else 0.0)
    by_v = {row[1]: row[2] for row in res.rows}
    assert by_v[400 * MB] > by_v[100 * MB]       # bigger file, bigger cluster


def test_run_sweep_dispatch(default_cfg):
    assert run_sweep(default_cfg, "rate-curve").header == \
        ["distance_m", "expected_rate_bps"]
    with pytest.raises(ValueError):
        run_sweep(default_cfg, "no-such-metric")
