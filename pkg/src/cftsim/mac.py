"""DCF MAC throughput with a constant backoff window and RTS/CTS.

Stations within carrier-sense range contend per slot with a fixed
transmission probability zeta = 2/(W+1).  The number of contenders around a
transfer pair is Poisson in the local vehicle density, and the expected
MAC-layer throughput follows from the per-slot success probability and the
expected slot duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Frame and interframe timings, in seconds.  SIFS exceeding DIFS is unusual
# but these are the measured defaults this model was built around; override
# in config if needed.
T_SLOT_S = 13e-6
T_RTS_S = 53e-6
T_CTS_S = 37e-6
T_DIFS_S = 32e-6
T_SIFS_S = 53e-6
T_ACK_S = 37e-6          # ACK assumed same duration as CTS (same-format control frame)

PACKET_BITS = 4.2 * 1024 * 8   # 4.2 KB average packet, in bits

POISSON_TAIL = 1e-12     # truncation mass for the contender distribution


@dataclass(frozen=True)
class MacParams:
    """Contention and timing parameters.

    rcs_m is the carrier-sense range diameter: rho_per_m * rcs_m vehicles
    contend on average.  rho_per_m is the default traffic density used when
    a caller does not supply one.
    """

    w: int = 32
    lp_bits: float = PACKET_BITS
    t_slot_s: float = T_SLOT_S
    t_rts_s: float = T_RTS_S
    t_cts_s: float = T_CTS_S
    t_difs_s: float = T_DIFS_S
    t_sifs_s: float = T_SIFS_S
    t_ack_s: float = T_ACK_S
    rcs_m: float = 250.0
    rho_per_m: float = 0.005

    def __post_init__(self):
        if self.w < 1:
            raise ValueError("backoff window must be >= 1")
        if self.lp_bits <= 0:
            raise ValueError("packet length must be positive")
        for name in ("t_slot_s", "t_rts_s", "t_cts_s", "t_difs_s", "t_sifs_s", "t_ack_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.rcs_m <= 0:
            raise ValueError("carrier-sense range must be positive")
        if self.rho_per_m < 0:
            raise ValueError("traffic density must be non-negative")


def transmission_prob(w: int) -> float:
    """Per-slot transmission probability zeta = 2/(W+1)."""
    if w < 1:
        raise ValueError(f"backoff window must be >= 1, got {w}")
    return 2.0 / (w + 1.0)


def contention_pmf(rho_per_m: float, rcs_m: float,
                   tail: float = POISSON_TAIL) -> tuple[np.ndarray, np.ndarray]:
    """PMF of the contender count n ~ Poisson(rho * rcs).

    Returns (values, masses) truncated once the remaining tail mass drops
    below `tail`, renormalised to sum exactly to 1.
    """
    lam = rho_per_m * rcs_m
    if lam < 0:
        raise ValueError("rho * rcs must be non-negative")
    if lam == 0.0:
        return np.array([0]), np.array([1.0])
    masses = [math.exp(-lam)]
    # p_{k+1} = p_k * lam / (k+1); stop when the tail is negligible.
    k = 0
    cum = masses[0]
    while cum < 1.0 - tail or k < lam:
        masses.append(masses[-1] * lam / (k + 1))
        k += 1
        cum += masses[-1]
    p = np.array(masses)
    p /= p.sum()
    return np.arange(p.size), p


def p_success(n: int, zeta: float) -> float:
    """Probability a busy slot carries exactly one transmission.

    P_suc = n*zeta*(1-zeta)^(n-1) / (1 - (1-zeta)^n), conditioned on at
    least one of the n contenders transmitting.
    """
    if n < 1:
        raise ValueError(f"need at least one contender, got n={n}")
    if not 0.0 < zeta <= 1.0:
        raise ValueError(f"zeta must be in (0, 1], got {zeta}")
    if n == 1:
        # zeta / (1 - (1 - zeta)) = 1; return it exactly rather than
        # through the rounding of the general expression.
        return 1.0
    if zeta == 1.0:
        return 0.0
    q = 1.0 - zeta
    return n * zeta * q ** (n - 1) / (1.0 - q**n)


def success_duration(params: MacParams, data_rate_bps: float) -> float:
    """Duration of a successful RTS/CTS/DATA/ACK exchange, in seconds."""
    if data_rate_bps <= 0:
        raise ValueError("data rate must be positive")
    return (params.t_rts_s + params.t_sifs_s + params.t_cts_s + params.t_sifs_s
            + params.lp_bits / data_rate_bps
            + params.t_sifs_s + params.t_ack_s + params.t_difs_s)


def collision_duration(params: MacParams) -> float:
    """Time lost to a collided RTS, in seconds."""
    return params.t_rts_s + params.t_difs_s


def avg_slot_length(n: int, zeta: float, params: MacParams,
                    data_rate_bps: float) -> float:
    """Expected slot duration T with n contenders.

    T = P_idle * t_slot + P_s * T_s + P_c * T_c where P_idle = (1-zeta)^n,
    P_s is the unconditional single-transmission probability and P_c the
    collision probability.
    """
    if n < 1:
        raise ValueError(f"need at least one contender, got n={n}")
    p_idle = (1.0 - zeta) ** n
    p_tr = 1.0 - p_idle
    p_s = p_tr * p_success(n, zeta)
    p_c = p_tr - p_s
    return (p_idle * params.t_slot_s
            + p_s * success_duration(params, data_rate_bps)
            + p_c * collision_duration(params))


def _pair_throughput(n: int, zeta: float, params: MacParams,
                     data_rate_bps: float) -> float:
    """Expected payload bits per second with exactly n contenders."""
    t = avg_slot_length(n, zeta, params, data_rate_bps)
    p_s = (1.0 - (1.0 - zeta) ** n) * p_success(n, zeta)
    return p_s * params.lp_bits / t


def throughput(rho_per_m: float | None, params: MacParams,
               data_rate_bps: float) -> float:
    """Expected MAC throughput R_thr between two vehicles, in bit/s.

    Averages the per-slot payload rate over the Poisson contender count.
    The transfer pair itself always contends, so n = 0 draws still see one
    active station; an empty road therefore yields the lone-pair ceiling
    rather than zero.
    """
    rho = params.rho_per_m if rho_per_m is None else rho_per_m
    if rho < 0:
        raise ValueError("traffic density must be non-negative")
    zeta = transmission_prob(params.w)
    ns, masses = contention_pmf(rho, params.rcs_m)
    total = 0.0
    for n, mass in zip(ns, masses):
        total += mass * _pair_throughput(max(int(n), 1), zeta, params, data_rate_bps)
    return total
