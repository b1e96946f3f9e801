"""Shared builders for the test suite."""

import numpy as np

from skycell.channel import PathLossParams, realize_network_channels
from skycell.scenario import ScenarioConfig, build_layout, place_users


def drawn_channels(seed, num_cells=2, num_antennas=4, num_nlos_paths=3,
                   **scenario_kw):
    """One seeded scenario realization plus its channel tensor."""
    config = ScenarioConfig(num_cells=num_cells, **scenario_kw)
    rng = np.random.default_rng(seed)
    realization = place_users(config, build_layout(config), rng)
    channels = realize_network_channels(realization, num_antennas,
                                        PathLossParams(), rng, num_nlos_paths)
    return realization, channels
