import numpy as np
import pytest

from spotvol.market_data import AssetIncrements, IncrementTable


def random_increments(rng, d, n_max, scale=0.2, n_min=3):
    """Random asynchronous increment table: per-asset interior tick times."""
    assets = []
    for j in range(d):
        n = int(rng.integers(n_min, n_max + 1))
        times = np.unique(rng.random(n))
        while times.size < n_min:
            times = np.unique(rng.random(n))
        dx = rng.standard_normal(times.size) * scale
        assets.append(AssetIncrements(asset_id=f"A{j + 1}", times=times, dx=dx))
    return IncrementTable(assets=tuple(assets))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
