"""Seeded experiment engine: scenario generation, sweeps, aggregation.

Each experiment walks a parameter grid; every (grid point, seed) pair gets
its own deterministic RNG stream derived from the base seed, so results are
independent of execution order and bit-identical across repeats.  Aggregates
always retain the per-run records they were computed from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mobility
from .channel import expected_rate
from .config import Config
from .mobility import Fleet, MobilityConfig
from .protocol import (FileSpec, VehicleState, link_budget, run_cft,
                       run_direct_baseline)

# Stream ids keep RNG derivation stable without relying on string hashing.
_STREAMS = {"connection": 1, "capability": 2, "max-volume": 3, "cluster": 4}

MAX_REQUEST_WAIT_STEPS = 900


def _rng(base_seed: int, stream: str, *key: int) -> np.random.Generator:
    parts = [int(base_seed), _STREAMS[stream], *(int(k) for k in key)]
    return np.random.default_rng(np.random.SeedSequence(parts))


@dataclass
class SweepResult:
    """A metric table plus the per-run records behind each aggregate row."""

    header: list[str]
    rows: list[tuple]
    records: dict = field(default_factory=dict)


def write_csv(path: str, result: SweepResult) -> None:
    """Write rows with a fixed number format so repeats are byte-identical."""
    def fmt(v):
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, str):
            return v
        return f"{float(v):.6f}"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(result.header) + "\n")
        for row in result.rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# Pair-population metrics: connection time and transmission capability


def _cross_direction_pairs(fleet: Fleet, length_m: float):
    """Relative kinematics of every pair of opposite-direction vehicles.

    Returns (dx, dy, dvx, dist) arrays, one entry per (eastbound, westbound)
    pair; dvy is zero on a straight highway.
    """
    fwd = fleet.direction > 0
    bwd = ~fwd
    xa, ya, va = fleet.x[fwd], fleet.y[fwd], fleet.vx[fwd]
    xb, yb, vb = fleet.x[bwd], fleet.y[bwd], fleet.vx[bwd]
    dx = mobility.ring_delta(xa[:, None], xb[None, :], length_m).ravel()
    dy = (yb[None, :] - ya[:, None]).ravel()
    dvx = (vb[None, :] - va[:, None]).ravel()
    dist = np.hypot(dx, dy)
    return dx, dy, dvx, dist


def _pair_connection_times(dx, dy, dvx, comm_range_m):
    """Vectorised residual connection time for in-range opposite pairs."""
    a = dvx * dx
    b = dvx * dvx
    radicand = b * comm_range_m**2 - (dvx * dy) ** 2
    radicand = np.maximum(radicand, 0.0)
    return (-a + np.sqrt(radicand)) / b


def _snapshot_states(cfg: Config, density: float, sd: float, seed_idx: int,
                     stream: str):
    """Warmed-up fleet snapshots for pair sampling, shared across ranges."""
    e = cfg.experiments
    mcfg = cfg.mobility(density, sd)
    rng = _rng(e.base_seed, stream, int(density * 1000), int(sd), seed_idx)
    fleet = mobility.init_scenario(mcfg, rng)
    mobility.warm_up(fleet, mcfg, rng, e.warmup_steps)
    snaps = []
    stride = max(int(round(e.snapshot_stride_s / mcfg.step_s)), 1)
    for _ in range(e.snapshots):
        snaps.append(fleet.copy())
        mobility.warm_up(fleet, mcfg, rng, stride)
    return snaps, mcfg


def connection_time_sweep(cfg: Config) -> SweepResult:
    """Mean residual connection time of in-range opposite-direction pairs.

    Sampled at snapshot instants after warm-up; unbounded or over-horizon
    predictions are capped at the experiment horizon.
    """
    e = cfg.experiments
    density = e.connection_density_per_km
    sd = e.safety_distance_m
    rows, records = [], {}
    for r_m in e.comm_ranges_m:
        records[(r_m,)] = []
    for seed_idx in range(e.seeds):
        snaps, mcfg = _snapshot_states(cfg, density, sd, seed_idx, "connection")
        for r_m in e.comm_ranges_m:
            vals = []
            for fleet in snaps:
                dx, dy, dvx, dist = _cross_direction_pairs(fleet, mcfg.lane_length_m)
                sel = dist <= r_m
                if not np.any(sel):
                    continue
                dts = _pair_connection_times(dx[sel], dy[sel], dvx[sel], r_m)
                vals.append(np.minimum(dts, e.horizon_s).mean())
            if vals:
                records[(r_m,)].append(float(np.mean(vals)))
    for r_m in e.comm_ranges_m:
        rec = records[(r_m,)]
        rows.append((r_m, density, sd, float(np.mean(rec)), len(rec)))
    return SweepResult(
        header=["comm_range_m", "density_per_km", "safety_distance_m",
                "avg_connection_time_s", "n_runs"],
        rows=rows,
        records=records,
    )


class _RateCache:
    """Memoised expected rate lookup, quantised to 0.25 m."""

    def __init__(self, cfg: Config):
        self.cfg = cfg
        self._cache = {}

    def __call__(self, distance_m: float) -> float:
        key = int(distance_m * 4)
        hit = self._cache.get(key)
        if hit is None:
            d = max(key / 4.0, 0.25)
            hit = expected_rate(d, self.cfg.channel, self.cfg.rates)
            self._cache[key] = hit
        return hit


def capability_sweep(cfg: Config) -> SweepResult:
    """Mean whole-fragment link capacity over the same pair population."""
    e = cfg.experiments
    density = e.connection_density_per_km
    sd = e.safety_distance_m
    frag_bits = 8.0 * e.fragment_bytes
    rate_of = _RateCache(cfg)
    rows, records = [], {}
    for r_m in e.comm_ranges_m:
        records[(r_m,)] = []
    for seed_idx in range(e.seeds):
        snaps, mcfg = _snapshot_states(cfg, density, sd, seed_idx, "capability")
        for r_m in e.comm_ranges_m:
            vals = []
            for fleet in snaps:
                dx, dy, dvx, dist = _cross_direction_pairs(fleet, mcfg.lane_length_m)
                sel = dist <= r_m
                if not np.any(sel):
                    continue
                dts = np.minimum(
                    _pair_connection_times(dx[sel], dy[sel], dvx[sel], r_m),
                    e.horizon_s)
                caps = [
                    e.fragment_bytes * int(rate_of(d) * t / frag_bits)
                    for d, t in zip(dist[sel], dts)
                ]
                vals.append(float(np.mean(caps)))
            if vals:
                records[(r_m,)].append(float(np.mean(vals)))
    for r_m in e.comm_ranges_m:
        rec = records[(r_m,)]
        rows.append((r_m, density, sd, float(np.mean(rec)), len(rec)))
    return SweepResult(
        header=["comm_range_m", "density_per_km", "safety_distance_m",
                "avg_capability_bytes", "n_runs"],
        rows=rows,
        records=records,
    )


def throughput_sweep(cfg: Config) -> SweepResult:
    """Expected MAC throughput over the (density, range) grid.

    The contender count scales with density times carrier-sense range, so
    both grid axes feed the Poisson mean.  The forwarding data rate is the
    configured nominal rate; the result is analytic and deterministic.
    """
    from .mac import throughput
    e = cfg.experiments
    rows, records = [], {}
    for density in e.densities_per_km:
        for r_m in e.comm_ranges_m:
            params = cfg.mac_for(r_m, density)
            val = throughput(density / 1000.0, params, e.nominal_mac_rate_bps)
            rows.append((density, r_m, val))
            records[(density, r_m)] = [val]
    return SweepResult(
        header=["density_per_km", "comm_range_m", "avg_throughput_bps"],
        rows=rows,
        records=records,
    )


def rate_curve(cfg: Config, distances_m=None) -> SweepResult:
    """Expected PHY rate versus link distance."""
    if distances_m is None:
        distances_m = np.arange(10.0, 601.0, 10.0)
    rows = [(float(d), expected_rate(float(d), cfg.channel, cfg.rates))
            for d in distances_m]
    return SweepResult(header=["distance_m", "expected_rate_bps"], rows=rows)


# ---------------------------------------------------------------------------
# Transfer scenarios: one request vehicle meeting a designated resource


@dataclass
class Trajectory:
    """Stepped kinematic record of every vehicle from the request instant."""

    x: np.ndarray        # (n_steps + 1, n_vehicles)
    speed: np.ndarray    # (n_steps + 1, n_vehicles)
    y: np.ndarray        # (n_vehicles,)
    direction: np.ndarray
    dt_s: float
    length_m: float

    @property
    def n_steps(self) -> int:
        return self.x.shape[0] - 1

    def state(self, vid: int, t_s: float) -> VehicleState:
        k = min(max(int(round(t_s / self.dt_s)), 0), self.n_steps)
        return VehicleState(
            vid=vid,
            x=float(self.x[k, vid]),
            y=float(self.y[vid]),
            vx=float(self.speed[k, vid] * self.direction[vid]),
            vy=0.0,
        )

    def first_window(self, vid_a: int, vid_b: int, range_m: float):
        """First contiguous in-range interval of the pair, in seconds."""
        dx = mobility.ring_delta(self.x[:, vid_a], self.x[:, vid_b], self.length_m)
        dy = self.y[vid_b] - self.y[vid_a]
        inside = np.hypot(dx, dy) <= range_m
        idx = np.nonzero(inside)[0]
        if idx.size == 0:
            return (0.0, 0.0)
        start = idx[0]
        breaks = np.nonzero(np.diff(idx) > 1)[0]
        end = idx[breaks[0]] if breaks.size else idx[-1]
        return (start * self.dt_s, (end + 1) * self.dt_s)


@dataclass
class TransferScenario:
    states: list
    head_vid: int
    resource_vid: int
    trajectory: Trajectory
    mobility_cfg: MobilityConfig


def _fleet_states(fleet: Fleet) -> list:
    return [
        VehicleState(vid=i, x=float(fleet.x[i]), y=float(fleet.y[i]),
                     vx=float(fleet.vx[i]), vy=0.0)
        for i in range(fleet.n)
    ]


def build_transfer_scenario(cfg: Config, density: float, sd: float,
                            comm_range_m: float, warmup_steps: int,
                            seed_idx: int, stream: str = "max-volume",
                            horizon_s: float | None = None,
                            request_at: str = "contact") -> TransferScenario:
    """Warm up a fleet and freeze it at the request instant.

    The request vehicle is an eastbound vehicle near the middle of the
    ring.  request_at picks the instant its file request fires:

    - "contact": at a random instant during an ongoing pass.  The holder
      is drawn uniformly from the westbound vehicles currently in range,
      so the request catches that link at a random phase and only its
      remainder is usable.  This is the natural setting for a scheme that
      grabs whatever link it happens to have.
    - "encounter": the moment a fresh westbound holder enters range, so
      the whole pass lies ahead.  A scheme that plans a transfer starts
      the clock when it discovers the resource, which happens at first
      beacon contact.

    The trajectory from the request instant on is recorded for validating
    predicted transfers.
    """
    if request_at not in ("contact", "encounter"):
        raise ValueError(f"unknown request_at '{request_at}'")
    e = cfg.experiments
    horizon = e.horizon_s if horizon_s is None else horizon_s
    mcfg = cfg.mobility(density, sd)
    rng = _rng(e.base_seed, stream, int(density * 1000), int(comm_range_m),
               int(sd), seed_idx)
    fleet = mobility.init_scenario(mcfg, rng)
    mobility.warm_up(fleet, mcfg, rng, warmup_steps)

    fwd = np.nonzero(fleet.direction > 0)[0]
    bwd = np.nonzero(fleet.direction < 0)[0]

    def choose_contact() -> tuple[int, int] | None:
        dx = mobility.ring_delta(fleet.x[fwd][:, None], fleet.x[bwd][None, :],
                                 mcfg.lane_length_m)
        dy = fleet.y[bwd][None, :] - fleet.y[fwd][:, None]
        in_range = np.hypot(dx, dy) <= comm_range_m
        has_holder = np.nonzero(in_range.any(axis=1))[0]
        if has_holder.size == 0:
            return None
        mid = np.argmin(np.abs(
            fleet.x[fwd[has_holder]] - mcfg.lane_length_m / 2.0))
        row = has_holder[mid]
        candidates = bwd[np.nonzero(in_range[row])[0]]
        return int(fwd[row]), int(candidates[rng.integers(candidates.size)])

    if request_at == "contact":
        picked = choose_contact()
        for _ in range(MAX_REQUEST_WAIT_STEPS):
            # Both directions always share some stretch of the ring, so
            # this loop is a no-op in practice; it guards degenerate
            # configs.
            if picked is not None:
                break
            mobility.step(fleet, mcfg, rng)
            picked = choose_contact()
        if picked is None:
            raise RuntimeError(
                "no oncoming contact found for a transfer scenario")
        head, resource = picked
    else:
        # Put the requester in the thick of its direction's traffic: the
        # vehicle minimizing mean ring distance to the rest (geometric
        # median).  The initial-gap rule fixes mean spacing per lane, so at
        # low densities the fleet occupies only part of the ring and drifts
        # into platoons; a requester at the edge of one, or straggling
        # between two, sees a fraction of the neighbours an interior
        # vehicle does.
        gaps = np.abs(mobility.ring_delta(fleet.x[fwd][:, None],
                                          fleet.x[fwd][None, :],
                                          mcfg.lane_length_m))
        head = int(fwd[np.argmin(gaps.mean(axis=1))])

        def holders_in_range() -> np.ndarray:
            dx = mobility.ring_delta(fleet.x[head], fleet.x[bwd],
                                     mcfg.lane_length_m)
            dy = fleet.y[bwd] - fleet.y[head]
            return np.hypot(dx, dy) <= comm_range_m

        prev = holders_in_range()
        resource = None
        for _ in range(MAX_REQUEST_WAIT_STEPS):
            mobility.step(fleet, mcfg, rng)
            now = holders_in_range()
            fresh = np.nonzero(now & ~prev)[0]
            if fresh.size:
                resource = int(bwd[fresh[rng.integers(fresh.size)]])
                break
            prev = now
        if resource is None:
            raise RuntimeError(
                "no oncoming vehicle entered range for a transfer scenario")

    states = _fleet_states(fleet)
    n_steps = int(round(horizon / mcfg.step_s))
    xs = np.empty((n_steps + 1, fleet.n))
    sp = np.empty((n_steps + 1, fleet.n))
    xs[0], sp[0] = fleet.x, fleet.speed
    for k in range(1, n_steps + 1):
        mobility.step(fleet, mcfg, rng)
        xs[k], sp[k] = fleet.x, fleet.speed
    traj = Trajectory(x=xs, speed=sp, y=fleet.y.copy(),
                      direction=fleet.direction.copy(), dt_s=mcfg.step_s,
                      length_m=mcfg.lane_length_m)
    return TransferScenario(states=states, head_vid=head,
                            resource_vid=resource, trajectory=traj,
                            mobility_cfg=mcfg)


def _scenario_runner(cfg: Config, scen: TransferScenario, density: float,
                     comm_range_m: float, horizon_s: float | None = None,
                     plan_margin_s: float = 0.0):
    """Bind a scenario to run_cft/run_direct callables over file sizes."""
    models = cfg.models(comm_range_m, density, horizon_s, plan_margin_s)
    head = scen.states[scen.head_vid]
    holders = [scen.resource_vid]
    window_cache = {}

    def window_of(vid: int):
        if vid not in window_cache:
            window_cache[vid] = scen.trajectory.first_window(
                vid, scen.resource_vid, comm_range_m)
        return window_cache[vid]

    def state_at(vid: int, t_s: float):
        return scen.trajectory.state(vid, t_s)

    def cft(file: FileSpec):
        return run_cft(head, scen.states, file, models, holders,
                       rho_per_m=density / 1000.0,
                       window_of=window_of, state_at=state_at)

    def direct(file: FileSpec):
        return run_direct_baseline(head, scen.states, file, models, holders)

    return cft, direct, models


def _max_volume_one_seed(cfg: Config, scen: TransferScenario, density: float,
                         comm_range_m: float, scheme: str) -> float:
    """Largest deliverable file volume for one scenario, in bytes.

    Success is monotone in the file size (a bigger file can only add load
    to every member), so a doubling search plus bisection on the fragment
    count finds the exact threshold.
    """
    e = cfg.experiments
    s = e.fragment_bytes
    cft, direct, models = _scenario_runner(
        cfg, scen, density, comm_range_m,
        plan_margin_s=e.max_volume_plan_margin_s)

    if scheme == "direct":
        head = scen.states[scen.head_vid]
        resource = scen.states[scen.resource_vid]
        try:
            b = link_budget(head, resource, FileSpec(s, s), models)
        except ValueError:
            return 0.0
        t_in, t_out = scen.trajectory.first_window(
            scen.head_vid, scen.resource_vid, comm_range_m)
        realized = int(b.e_c_bps * (t_out - t_in) / (8.0 * s))
        n = min(b.n_frags, realized)
        return float(min(n, 1_000_000) * s)

    def ok(frags: int) -> bool:
        file = FileSpec(frags * s, s)
        out = cft(file)
        return out.bytes_delivered >= file.v_file_bytes

    if not ok(1):
        return 0.0
    lo, hi = 1, 2
    while ok(hi):
        lo, hi = hi, hi * 2
        if hi > 65536:
            break
    # Invariant: ok(lo) holds, ok(hi) fails (or hi hit the cap).
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return float(lo * s)


def max_transfer_volume(cfg: Config, scheme: str) -> SweepResult:
    """Largest volume deliverable in at least success_fraction of runs."""
    if scheme not in ("cft", "direct"):
        raise ValueError(f"unknown scheme '{scheme}'")
    e = cfg.experiments
    r_m = e.max_volume_range_m
    sd = e.max_volume_sd_m
    rows, records = [], {}
    # An opportunistic transfer can only use the remainder of the link it
    # happens to have; a planned transfer starts when the resource is first
    # discovered, with the whole pass ahead.
    request_at = "contact" if scheme == "direct" else "encounter"
    # The direct estimate is cheap and far noisier per run (the current
    # link's remaining lifetime is near-uniform), so it gets its own count.
    n_seeds = (e.max_volume_direct_seeds if scheme == "direct"
               else e.max_volume_seeds)
    for density in e.max_volume_densities:
        per_seed = []
        for seed_idx in range(n_seeds):
            scen = build_transfer_scenario(
                cfg, density, sd, r_m, e.max_volume_warmup_steps, seed_idx,
                request_at=request_at)
            per_seed.append(
                _max_volume_one_seed(cfg, scen, density, r_m, scheme))
        ordered = sorted(per_seed)
        # Largest volume still achieved by at least success_fraction of runs.
        need = math.ceil(e.success_fraction * len(ordered))
        volume = ordered[len(ordered) - need]
        records[(scheme, density)] = per_seed
        rows.append((scheme, density, r_m, sd, volume, len(per_seed)))
    return SweepResult(
        header=["scheme", "density_per_km", "comm_range_m",
                "safety_distance_m", "max_volume_bytes", "n_runs"],
        rows=rows,
        records=records,
    )


def cluster_size_profile(cfg: Config) -> SweepResult:
    """Mean cluster size versus file size, per traffic density.

    Runs whose file fits through the direct link record a cluster size of
    zero and are excluded from the mean (no cluster was formed), as are
    runs where recruitment could not cover the file.
    """
    e = cfg.experiments
    r_m = e.cluster_range_m
    sd = e.cluster_sd_m
    rows, records = [], {}
    for density in e.cluster_densities:
        # Covering a large file takes the resource pass across a long
        # stretch of convoy, so this experiment observes further ahead
        # than the delivery-volume one.
        scens = [
            build_transfer_scenario(cfg, density, sd, r_m,
                                    e.cluster_warmup_steps, seed_idx,
                                    stream="cluster", request_at="encounter",
                                    horizon_s=e.cluster_horizon_s)
            for seed_idx in range(e.cluster_seeds)
        ]
        runners = [
            _scenario_runner(cfg, scen, density, r_m,
                             horizon_s=e.cluster_horizon_s)[0]
            for scen in scens
        ]
        for v_bytes in e.file_sizes_bytes:
            file = FileSpec(v_bytes, e.fragment_bytes)
            sizes = []
            for run in runners:
                out = run(file)
                sizes.append(out.n_c)
            formed = [n for n in sizes if n > 0]
            avg = float(np.mean(formed)) if formed else 0.0
            records[(density, v_bytes)] = sizes
            rows.append((density, v_bytes, avg, len(formed)))
    return SweepResult(
        header=["density_per_km", "v_file_bytes", "avg_cluster_size",
                "n_clustered_runs"],
        rows=rows,
        records=records,
    )


def run_sweep(cfg: Config, metric: str) -> SweepResult:
    """Dispatch a named experiment sweep."""
    if metric == "connection-time":
        return connection_time_sweep(cfg)
    if metric == "capacity":
        return capability_sweep(cfg)
    if metric == "throughput":
        return throughput_sweep(cfg)
    if metric == "rate-curve":
        return rate_curve(cfg)
    if metric == "cluster-size":
        return cluster_size_profile(cfg)
    raise ValueError(f"unknown metric '{metric}'")
