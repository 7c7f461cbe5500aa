import numpy as np
import pytest

import cfpart as cp


@pytest.fixture(scope="session")
def channel():
    return cp.ChannelModel.from_db(10.0)


def random_instance(seed, k, l, area=1.0, db=10.0):
    channel = cp.ChannelModel.from_db(db)
    layout = cp.gen_layout(seed, k, l, area)
    gains = cp.path_gains(layout, channel)
    return layout, channel, gains, cp.build_graph(gains)


def random_decomposition(rng, k, l, m):
    """Uniform random decomposition with every label used and >= 1 BS each."""
    while True:
        assign = rng.integers(0, m, size=k + l)
        # force every label to appear and to own at least one BS
        bs = assign[k:]
        if len(np.unique(assign)) == m and len(np.unique(bs)) == m:
            return cp.Decomposition(assign, k, m)
