"""Shared fixtures and exact-model helpers for the test suite."""

import math

import numpy as np
import pytest

from cftsim.channel import ChannelParams, RateTable
from cftsim.config import load_config
from cftsim.mac import MacParams
from cftsim.protocol import Models


@pytest.fixture(scope="session")
def default_cfg():
    return load_config()


def single_rate_models(rate_bps: float, range_m: float = 250.0,
                       horizon_s: float = 120.0,
                       plan_margin_s: float = 0.0,
                       ring_length_m: float | None = None) -> Models:
    """Models whose expected PHY rate is exactly rate_bps at any distance.

    A single-entry ladder with a threshold of 1e-300 puts the whole SNR
    tail mass on that one rate (the Gamma tail at ~0 is exactly 1.0 in
    floats), which makes link capacities exact rational numbers and lets
    tests assert fragment counts without tolerance.
    """
    channel = ChannelParams(mu_profile=((0.0, math.inf, 1.0),))
    rates = RateTable(rates_bps=(rate_bps,), thresholds_snr=(1e-300,))
    return Models(channel=channel, rates=rates, mac=MacParams(),
                  range_m=range_m, horizon_s=horizon_s,
                  ring_length_m=ring_length_m,
                  plan_margin_s=plan_margin_s)


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
