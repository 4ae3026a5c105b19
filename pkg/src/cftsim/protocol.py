"""Cluster-based cooperative file transfer between moving vehicles.

A request vehicle that cannot download a whole file from a passing resource
vehicle within their connection time recruits nearby co-directional vehicles
into a cluster.  Each cluster vehicle downloads a contiguous range of file
fragments from the resource while that resource is within its own range, and
afterwards forwards those fragments to the request vehicle (the cluster
head).  Capacity accounting is done in whole fragments so a handoff never
truncates a fragment mid-air.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .channel import ChannelParams, RateTable, expected_rate
from .connection import predict_connection_time, range_window
from .mac import MacParams, throughput


class NoResourceError(Exception):
    """No reachable vehicle holds the requested file."""


class InsufficientCapacityError(Exception):
    """Recruitment exhausted the fleet before covering the file."""


@dataclass(frozen=True)
class FileSpec:
    """A file of v_file_bytes divided into fragments of s_bytes.

    The final fragment may be short; it still counts as one fragment.
    """

    v_file_bytes: float
    s_bytes: float = 1_000_000.0

    def __post_init__(self):
        if self.v_file_bytes < 0:
            raise ValueError("file size must be non-negative")
        if self.s_bytes <= 0:
            raise ValueError("fragment size must be positive")

    @property
    def n_total(self) -> int:
        return int(math.ceil(self.v_file_bytes / self.s_bytes))

    def fragment_bytes(self, start: int, count: int) -> float:
        """Actual byte size of fragments [start, start+count), 0-indexed."""
        if count <= 0:
            return 0.0
        hi = min((start + count) * self.s_bytes, self.v_file_bytes)
        return hi - start * self.s_bytes


@dataclass(frozen=True)
class VehicleState:
    """Kinematic snapshot of one vehicle."""

    vid: int
    x: float
    y: float
    vx: float
    vy: float = 0.0


@dataclass(frozen=True)
class Models:
    """Bundle of the radio, rate, and MAC models plus scenario scope."""

    channel: ChannelParams
    rates: RateTable
    mac: MacParams
    range_m: float
    horizon_s: float = 120.0
    ring_length_m: float | None = None  # set for ring-road scenarios
    # Safety margin the cluster planner shaves off every member budget, in
    # seconds of link time.  Predictions assume constant velocity; actual
    # trajectories drift, so planning to the full budget over-commits about
    # half the members.  Zero keeps planning exactly at the budget.
    plan_margin_s: float = 0.0

    def ring_dx(self, x_from: float, x_to: float) -> float:
        d = x_to - x_from
        if self.ring_length_m is None:
            return d
        half = self.ring_length_m / 2.0
        return (d + half) % self.ring_length_m - half


@dataclass(frozen=True)
class LinkBudget:
    """Whole-fragment transfer capacity of one link.

    n_frags = floor(e_c * delta_t / (8 s)) fragments fit in the connection
    window; capacity is their byte volume, t0_s the time they occupy, and
    t_resid_s the unusable remainder of the window (too short for one more
    whole fragment).  t_start_s is the window opening relative to now: zero
    for a currently connected pair, positive for a pair that will only come
    into range later.
    """

    delta_t_s: float
    e_c_bps: float
    n_frags: float
    capacity_bytes: float
    t0_s: float
    t_resid_s: float
    t_start_s: float = 0.0
    rep_distance_m: float = 0.0


def _relative(a: VehicleState, b: VehicleState, models: Models):
    dx = models.ring_dx(a.x, b.x)
    dy = b.y - a.y
    return dx, dy, b.vx - a.vx, b.vy - a.vy


def _budget_from_window(duration_s: float, distance_m: float, file: FileSpec,
                        models: Models, t_start_s: float = 0.0) -> LinkBudget:
    e_c = expected_rate(distance_m, models.channel, models.rates)
    frag_bits = 8.0 * file.s_bytes
    if math.isinf(duration_s):
        return LinkBudget(duration_s, e_c, math.inf, math.inf, 0.0, math.inf,
                          t_start_s, distance_m)
    if e_c <= 0.0:
        return LinkBudget(duration_s, e_c, 0, 0.0, 0.0, duration_s,
                          t_start_s, distance_m)
    n = int(e_c * duration_s / frag_bits)
    t0 = n * frag_bits / e_c
    return LinkBudget(
        delta_t_s=duration_s,
        e_c_bps=e_c,
        n_frags=n,
        capacity_bytes=n * file.s_bytes,
        t0_s=t0,
        t_resid_s=duration_s - t0,
        t_start_s=t_start_s,
        rep_distance_m=distance_m,
    )


def link_budget(i: VehicleState, source: VehicleState, file: FileSpec,
                models: Models) -> LinkBudget:
    """Capacity of the i <- source link over its remaining connection time.

    The pair must currently be within communication range; the expected rate
    is evaluated at the present distance.
    """
    dx, dy, dvx, dvy = _relative(i, source, models)
    dist = math.hypot(dx, dy)
    if dist > models.range_m:
        raise ValueError(
            f"vehicles {i.vid} and {source.vid} are {dist:.1f} m apart, "
            f"beyond the {models.range_m:.1f} m range"
        )
    dt = predict_connection_time(dx, dy, dvx, dvy, models.range_m)
    # A zero-distance link would have an undefined rate; distances are
    # lane-separated in practice, but clamp defensively.
    dist = max(dist, 1e-6)
    return _budget_from_window(dt, dist, file, models)


def prospective_link_budget(i: VehicleState, source: VehicleState,
                            file: FileSpec, models: Models) -> LinkBudget:
    """Capacity of a link that may only open in the future.

    Uses the full future in-range window, clipped to the planning horizon,
    with the expected rate taken at the window-midpoint distance (a pair
    not yet in range has no meaningful present-distance rate).  A currently
    connected pair is delegated to link_budget.
    """
    dx, dy, dvx, dvy = _relative(i, source, models)
    if math.hypot(dx, dy) <= models.range_m:
        return link_budget(i, source, file, models)
    window = range_window(dx, dy, dvx, dvy, models.range_m)
    if window is None:
        return _budget_from_window(0.0, models.range_m, file, models)
    t_in, t_out = window
    t_out = min(t_out, models.horizon_s)
    if t_out <= t_in:
        return _budget_from_window(0.0, models.range_m, file, models, t_start_s=t_in)
    t_mid = 0.5 * (t_in + t_out)
    d_mid = math.hypot(dx + dvx * t_mid, dy + dvy * t_mid)
    d_mid = max(d_mid, 1e-6)
    return _budget_from_window(t_out - t_in, d_mid, file, models, t_start_s=t_in)


def select_resource(request: VehicleState, responders: list[VehicleState],
                    file: FileSpec, models: Models) -> VehicleState:
    """Pick the downloading source among responding file holders.

    The responder whose link to the request vehicle has the largest
    whole-fragment capacity wins; ties go to the nearer responder, then to
    the smaller vehicle id.  Only responders within communication range are
    considered (a broadcast cannot reach the others).
    """
    if not responders:
        raise NoResourceError("no vehicle responded to the file request")
    scored = []
    for r in responders:
        dx, dy, _, _ = _relative(request, r, models)
        dist = math.hypot(dx, dy)
        if dist > models.range_m:
            continue
        b = link_budget(request, r, file, models)
        scored.append((-b.capacity_bytes, dist, r.vid, r))
    if not scored:
        raise NoResourceError("no responder within communication range")
    scored.sort(key=lambda t: t[:3])
    return scored[0][3]


def direct_feasible(request: VehicleState, resource: VehicleState,
                    file: FileSpec, models: Models) -> bool:
    """True when the whole file fits through the direct link."""
    return link_budget(request, resource, file, models).capacity_bytes >= file.v_file_bytes


@dataclass
class ClusterMember:
    vid: int
    budget: LinkBudget
    frag_start: int = 0
    frag_count: int = 0
    # Fragments the planner may actually schedule on this member; defaults
    # to the full budget when no planning margin is in force.
    plan_frags: float | None = None

    @property
    def planned_frags(self) -> float:
        return self.budget.n_frags if self.plan_frags is None else self.plan_frags


def _derated_frags(budget: LinkBudget, file: FileSpec, models: Models) -> float:
    """Budget fragment count minus the planning safety margin."""
    if math.isinf(budget.n_frags):
        return budget.n_frags
    if models.plan_margin_s <= 0.0:
        return budget.n_frags
    margin = math.ceil(models.plan_margin_s * budget.e_c_bps / (8.0 * file.s_bytes))
    return max(budget.n_frags - margin, 0)


def _plannable_frags(member: VehicleState, head: VehicleState,
                     budget: LinkBudget, file: FileSpec,
                     models: Models) -> float:
    """Fragments the member can download from the resource AND hand to the
    head, given both predicted contact windows.

    A fragment is only useful if the member finishes downloading it while
    it shares air time with the head to forward it.  With the member-head
    contact window [t_in, t_out] and the download opening at t_start,
    assigning b bytes puts the download end at t_done = t_start + 8b/e_c
    and the forwarding end at t_done + 8b/r_thr, so b must satisfy

        t_start + 8b/e_c >= t_in + margin   (in contact when trying to send)
        t_start + 8b*(1/e_c + 1/r_thr) <= t_out - margin

    Fragments held by a member that has already dropped out of contact, or
    that never entered it, are lost: undershooting t_in is as fatal as
    overshooting t_out.  Members whose two windows cannot satisfy both
    bounds at once contribute nothing.
    """
    plan = _derated_frags(budget, file, models)
    if plan <= 0:
        return 0.0
    dx, dy, dvx, dvy = _relative(member, head, models)
    window = range_window(dx, dy, dvx, dvy, models.range_m)
    if window is None:
        return 0.0
    t_in, t_out = window
    if t_in >= models.horizon_s:
        return 0.0
    if math.isinf(t_out):
        return plan
    t_out = min(t_out, models.horizon_s)
    e_c = budget.e_c_bps
    if e_c <= 0:
        return 0.0
    # Representative forwarding distance: the pair mid-contact, not now
    # (a future contact is out of range right now by construction).
    t_mid = 0.5 * (t_in + t_out)
    d_mid = math.hypot(dx + dvx * t_mid, dy + dvy * t_mid)
    fwd_rate = expected_rate(max(d_mid, 1e-6), models.channel, models.rates)
    if fwd_rate <= 0:
        return 0.0
    r_thr = throughput(None, models.mac, fwd_rate)
    if r_thr <= 0:
        return 0.0
    # Forwarding cannot start before the download ends (t_start + 8b/e_c)
    # nor before the contact opens (t_in), and must finish by t_out less
    # the margin.  Feasibility shrinks as b grows, so the cap is the root
    # of the piecewise-linear constraint.
    b_kink = (t_in - budget.t_start_s) * e_c / 8.0
    b_wait = (t_out - t_in - models.plan_margin_s) * r_thr / 8.0
    if b_wait <= b_kink:
        cap_bytes = b_wait
    else:
        usable_s = t_out - models.plan_margin_s - budget.t_start_s
        cap_bytes = usable_s / (8.0 / e_c + 8.0 / r_thr)
    if cap_bytes <= 0:
        return 0.0
    return min(plan, float(math.floor(cap_bytes / file.s_bytes)))


@dataclass
class Cluster:
    """A covering set of downloaders for one file transfer.

    Members are ordered by recruitment (nearest to the resource first); the
    request vehicle itself appears as the first member when it has usable
    direct capacity, since its own download needs no forwarding.
    """

    head: int
    resource: int
    members: list[ClusterMember]

    @property
    def n_c(self) -> int:
        return len(self.members)

    @property
    def total_capacity_bytes(self) -> float:
        return sum(m.budget.capacity_bytes for m in self.members)

    def total_planned_bytes(self, s_bytes: float) -> float:
        return sum(s_bytes * m.planned_frags for m in self.members)


def _same_heading(a: VehicleState, b: VehicleState) -> bool:
    return a.vx * b.vx > 0.0


def build_cluster(head: VehicleState, resource: VehicleState,
                  fleet: list[VehicleState], file: FileSpec,
                  models: Models) -> Cluster:
    """Recruit the minimal cluster able to cover the file.

    Recruitment expands ring by ring, as a relayed broadcast propagates:
    first the head's neighbours, then everyone in earshot of a vehicle
    that already heard the invitation.  Within each ring, candidates
    closer to the resource vehicle are taken first, so the resource hands
    fragments to the nearest member at each handoff.  Recruitment stops at
    the first member set whose summed usable capacities cover the file,
    which makes the cluster minimal.

    Only vehicles travelling the head's way are eligible: an opposite
    vehicle leaves the cluster neighbourhood before it could forward
    anything.  Raises InsufficientCapacityError when every reachable
    candidate together still cannot cover the file.
    """
    states = {v.vid: v for v in fleet}
    members: list[ClusterMember] = []
    covered = 0.0

    def admit(v: VehicleState, budget: LinkBudget) -> bool:
        nonlocal covered
        if v.vid == head.vid:
            plan = _derated_frags(budget, file, models)
        else:
            # Anything beyond what the member can relay back to the head
            # is dead weight; its planned share is capped accordingly.
            plan = _plannable_frags(v, head, budget, file, models)
        if plan <= 0:
            return False
        members.append(ClusterMember(v.vid, budget, plan_frags=plan))
        covered += file.s_bytes * plan if not math.isinf(plan) else math.inf
        return True

    try:
        head_budget = link_budget(head, resource, file, models)
    except ValueError:
        head_budget = None
    if head_budget is not None and head_budget.capacity_bytes > 0:
        admit(head, head_budget)
    if covered >= file.v_file_bytes:
        return Cluster(head.vid, resource.vid, members)

    recruited = {head.vid, resource.vid}
    anchors = [head]
    while True:
        # Next ring: anyone in earshot of a vehicle that already carries
        # the invitation.  The broadcast is omnidirectional, so vehicles
        # with nothing to offer, including oncoming ones, still relay it
        # across gaps in the convoy.
        ring = []
        for v in fleet:
            if v.vid in recruited:
                continue
            for a in anchors:
                dx, dy, _, _ = _relative(a, v, models)
                if math.hypot(dx, dy) <= models.range_m:
                    ring.append(v)
                    break
        if not ring:
            raise InsufficientCapacityError(
                f"cluster capacity {covered:.0f} B cannot cover "
                f"{file.v_file_bytes:.0f} B"
            )
        def dist_to_resource(v: VehicleState) -> tuple:
            dx, dy, _, _ = _relative(resource, v, models)
            return (math.hypot(dx, dy), v.vid)
        ring.sort(key=dist_to_resource)
        for v in ring:
            recruited.add(v.vid)
            if not _same_heading(v, head):
                continue
            budget = prospective_link_budget(v, resource, file, models)
            if not admit(v, budget):
                continue
            if covered >= file.v_file_bytes:
                return Cluster(head.vid, resource.vid, members)
        anchors = ring


def assign_fragments(cluster: Cluster, file: FileSpec) -> Cluster:
    """Assign contiguous fragment ranges to members in recruitment order.

    Each member takes as many of the remaining fragments as its budget
    allows; the final member of the cover may take fewer than its maximum.
    Returns the same cluster with frag_start/frag_count filled in.
    """
    if cluster.total_planned_bytes(file.s_bytes) < file.v_file_bytes:
        raise ValueError("cluster does not cover the file")
    n_total = file.n_total
    next_frag = 0
    for m in cluster.members:
        if next_frag >= n_total:
            m.frag_start, m.frag_count = next_frag, 0
            continue
        remaining = n_total - next_frag
        take = remaining if math.isinf(m.planned_frags) \
            else min(int(m.planned_frags), remaining)
        m.frag_start, m.frag_count = next_frag, take
        next_frag += take
    if next_frag < n_total:
        # Coverage in bytes guarantees coverage in whole fragments:
        # sum(n_i) * s >= V implies sum(n_i) >= ceil(V/s).
        raise AssertionError("fragment assignment failed to cover the file")
    return cluster


def forwarding_feasible(member: VehicleState, head: VehicleState,
                        assigned_bytes: float, models: Models,
                        rho_per_m: float | None = None) -> bool:
    """Can the member push its fragments to the head in their contact time?

    True when the member-head contact window times the expected MAC
    throughput covers the assigned bytes.  A member still waiting for its
    first contact with the head holds its fragments until then; one whose
    contact has already closed (or never happens) cannot deliver at all:
    a second contact never occurs on an open road and retries are out of
    scope.
    """
    if assigned_bytes <= 0:
        return True
    dx, dy, dvx, dvy = _relative(member, head, models)
    window = range_window(dx, dy, dvx, dvy, models.range_m)
    if window is None:
        return False
    t_in, t_out = window
    if math.isinf(t_out):
        return True
    dt = t_out - t_in
    if dt <= 0:
        return False
    t_mid = 0.5 * (t_in + t_out)
    d_mid = math.hypot(dx + dvx * t_mid, dy + dvy * t_mid)
    e_c = expected_rate(max(d_mid, 1e-6), models.channel, models.rates)
    if e_c <= 0:
        return False
    r_thr = throughput(rho_per_m, models.mac, e_c)
    return dt * r_thr / 8.0 >= assigned_bytes


@dataclass
class MemberResult:
    vid: int
    assigned_bytes: float
    downloaded_bytes: float
    forwarded_bytes: float
    download_done_s: float
    forward_ok: bool


@dataclass
class TransferOutcome:
    """Result of one transfer attempt.

    mode is "direct" when the file fit through the resource-head link,
    "clustered" when every fragment reached the head via the cluster, and
    "failed" otherwise.  bytes_delivered counts bytes that reached the head.
    """

    mode: str
    bytes_delivered: float
    cluster: Cluster | None = None
    timeline: dict = field(default_factory=dict)
    member_results: list[MemberResult] = field(default_factory=list)

    @property
    def n_c(self) -> int:
        return self.cluster.n_c if self.cluster is not None else 0


def _ballistic(state: VehicleState, t: float) -> VehicleState:
    return VehicleState(state.vid, state.x + state.vx * t,
                        state.y + state.vy * t, state.vx, state.vy)


def _evaluate_plan(cluster: Cluster, file: FileSpec, models: Models,
                   states: dict, rho_per_m: float | None,
                   window_of=None, state_at=None) -> TransferOutcome:
    """Score a fragment plan member by member.

    window_of(vid) -> (t_in, t_out) supplies each member's realised window
    with the resource, and state_at(vid, t) its kinematic state when it is
    ready to forward; by default both come from ballistic prediction off the
    planning snapshot.  Download shortfalls (window shorter than the
    assigned fragments need) and forwarding failures both reduce delivered
    bytes; any shortfall demotes the outcome to failed.
    """
    head = states[cluster.head]
    delivered = 0.0
    results = []
    frag_bits = 8.0 * file.s_bytes
    for m in cluster.members:
        assigned = file.fragment_bytes(m.frag_start, m.frag_count)
        b = m.budget
        if window_of is None:
            t_in, t_out = b.t_start_s, b.t_start_s + b.delta_t_s
        else:
            t_in, t_out = window_of(m.vid)
        window = max(t_out - t_in, 0.0)
        if b.e_c_bps <= 0:
            frags_possible = 0
        elif math.isinf(window):
            # A contact that never closes downloads everything assigned.
            frags_possible = m.frag_count
        else:
            frags_possible = int(b.e_c_bps * window / frag_bits)
        frags_got = min(m.frag_count, frags_possible)
        downloaded = file.fragment_bytes(m.frag_start, frags_got)
        t_done = t_in + (frags_got * frag_bits / b.e_c_bps if b.e_c_bps > 0 else 0.0)
        if m.vid == cluster.head:
            # The head's own fragments need no forwarding hop.
            ok = True
            forwarded = downloaded
        else:
            if state_at is None:
                member_then = _ballistic(states[m.vid], t_done)
                head_then = _ballistic(head, t_done)
            else:
                member_then = state_at(m.vid, t_done)
                head_then = state_at(head.vid, t_done)
            ok = forwarding_feasible(member_then, head_then, downloaded,
                                     models, rho_per_m)
            forwarded = downloaded if ok else 0.0
        delivered += forwarded
        results.append(MemberResult(m.vid, assigned, downloaded, forwarded,
                                    t_done, ok))
    complete = delivered >= file.v_file_bytes
    download_end = max((r.download_done_s for r in results), default=0.0)
    return TransferOutcome(
        mode="clustered" if complete else "failed",
        bytes_delivered=min(delivered, file.v_file_bytes),
        cluster=cluster,
        timeline={"download_end_s": download_end},
        member_results=results,
    )


def run_cft(request: VehicleState, fleet: list[VehicleState], file: FileSpec,
            models: Models, holders: list[int],
            rho_per_m: float | None = None, window_of=None,
            state_at=None) -> TransferOutcome:
    """Full cluster-based transfer pipeline for one request.

    holders lists the vehicle ids that possess the file and answer the
    broadcast.  Returns a failed outcome with zero bytes when none of them
    is reachable, a direct outcome when one link suffices, and otherwise
    builds, schedules, and scores a cluster.
    """
    states = {v.vid: v for v in fleet}
    responders = [states[h] for h in holders if h in states and h != request.vid]
    try:
        resource = select_resource(request, responders, file, models)
    except NoResourceError:
        return TransferOutcome(mode="failed", bytes_delivered=0.0)
    rs = link_budget(request, resource, file, models)
    if rs.capacity_bytes >= file.v_file_bytes:
        duration = (file.v_file_bytes * 8.0 / rs.e_c_bps) if file.v_file_bytes else 0.0
        return TransferOutcome(
            mode="direct",
            bytes_delivered=file.v_file_bytes,
            timeline={"download_end_s": duration},
        )
    try:
        cluster = build_cluster(request, resource, fleet, file, models)
    except InsufficientCapacityError:
        return TransferOutcome(mode="failed", bytes_delivered=0.0)
    assign_fragments(cluster, file)
    return _evaluate_plan(cluster, file, models, states, rho_per_m,
                          window_of, state_at)


def run_direct_baseline(request: VehicleState, fleet: list[VehicleState],
                        file: FileSpec, models: Models,
                        holders: list[int]) -> TransferOutcome:
    """Single-link transfer that discards files too large for the link.

    The baseline scheme never clusters: when the best responder's capacity
    is below the file size the transfer is simply not attempted.
    """
    states = {v.vid: v for v in fleet}
    responders = [states[h] for h in holders if h in states and h != request.vid]
    try:
        resource = select_resource(request, responders, file, models)
    except NoResourceError:
        return TransferOutcome(mode="failed", bytes_delivered=0.0)
    rs = link_budget(request, resource, file, models)
    if rs.capacity_bytes >= file.v_file_bytes:
        duration = (file.v_file_bytes * 8.0 / rs.e_c_bps) if file.v_file_bytes else 0.0
        return TransferOutcome(
            mode="direct",
            bytes_delivered=file.v_file_bytes,
            timeline={"download_end_s": duration},
        )
    return TransferOutcome(mode="failed", bytes_delivered=0.0)
