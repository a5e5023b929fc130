"""Shared fixtures: small synthetic panels and frozen sampler states."""

import numpy as np
import pytest

from matnet import PriorConfig, SyntheticSpec, synthetic_panel
from matnet.gibbs import init_state


@pytest.fixture
def small_panel():
    spec = SyntheticSpec(n_nodes=3, n_periods=8, n_factors=2, seed=11)
    panel, factors, truth = synthetic_panel(spec)
    return panel, factors, truth


@pytest.fixture
def frozen_state(small_panel):
    panel, factors, _ = small_panel
    prior = PriorConfig()
    state = init_state(panel, factors, prior, np.random.default_rng(202))
    return state, panel, factors, prior
