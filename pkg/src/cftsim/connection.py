"""Link lifetime prediction for vehicles moving at constant velocity.

Two vehicles stay connected while their separation is at most the
communication range R.  With relative position (dx, dy) and relative
velocity (dvx, dvy) both treated as constant, the separation is

    |d + v t|^2 = B t^2 + 2 A t + (dx^2 + dy^2)

with A = dvx*dx + dvy*dy and B = dvx^2 + dvy^2, so range crossings are the
roots of a quadratic and the residual connection time of an in-range pair
has a closed form.
"""

from __future__ import annotations

import math


def predict_connection_time(dx: float, dy: float, dvx: float, dvy: float,
                            comm_range_m: float) -> float:
    """Residual time until an in-range pair separates beyond comm_range_m.

    Returns math.inf when the relative velocity is zero (the pair never
    separates under the constant-velocity assumption); callers cap that with
    their own horizon.  Raises ValueError if the pair is already out of
    range, where no residual lifetime is defined.
    """
    if comm_range_m <= 0.0:
        raise ValueError(f"communication range must be positive, got {comm_range_m}")
    if dx * dx + dy * dy > comm_range_m * comm_range_m:
        raise ValueError(
            "pair is out of communication range; predict_connection_time "
            "requires an in-range pair"
        )
    a = dvx * dx + dvy * dy
    b = dvx * dvx + dvy * dvy
    if b == 0.0:
        return math.inf
    cross = dvy * dx - dvx * dy
    radicand = b * comm_range_m * comm_range_m - cross * cross
    # In-range start guarantees a non-negative radicand up to rounding.
    radicand = max(radicand, 0.0)
    return (-a + math.sqrt(radicand)) / b


def range_window(dx: float, dy: float, dvx: float, dvy: float,
                 comm_range_m: float) -> tuple[float, float] | None:
    """Future time window [t_in, t_out] during which the pair is in range.

    Generalises predict_connection_time to pairs that are currently out of
    range but approaching: for those the window starts at t_in > 0.  For an
    in-range pair t_in is 0 and t_out is the residual connection time.
    Returns None when the trajectories never come within range.  A stationary
    in-range pair yields (0, inf).
    """
    if comm_range_m <= 0.0:
        raise ValueError(f"communication range must be positive, got {comm_range_m}")
    r2 = comm_range_m * comm_range_m
    in_range = dx * dx + dy * dy <= r2
    b = dvx * dvx + dvy * dvy
    if b == 0.0:
        return (0.0, math.inf) if in_range else None
    a = dvx * dx + dvy * dy
    cross = dvy * dx - dvx * dy
    radicand = b * r2 - cross * cross
    if radicand < 0.0:
        return None
    root = math.sqrt(radicand)
    t_in = (-a - root) / b
    t_out = (-a + root) / b
    if t_out <= 0.0 and not in_range:
        return None
    return (max(t_in, 0.0), t_out)
