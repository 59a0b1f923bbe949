import numpy as np
import pytest

from trfp.features import WindowParams
from trfp.features.groups import Window
from trfp.trace_model import CleanTrace, NS_PER_S


def make_window(times_s, sizes, params=None) -> Window:
    params = params or WindowParams()
    return Window(
        np.asarray(times_s, dtype=np.float64),
        np.asarray(sizes, dtype=np.float64),
        params,
    )


def trace_from_seconds(times_s, sizes=None, **kwargs) -> CleanTrace:
    times_ns = np.round(np.asarray(times_s, dtype=np.float64) * NS_PER_S).astype(np.int64)
    if sizes is None:
        sizes = np.full(times_ns.size, 100, dtype=np.int64)
    return CleanTrace(times_ns, np.asarray(sizes, dtype=np.int64), **kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_window(rng, n_packets, params=None) -> Window:
    """Lognormal IATs, integer sizes in [40, 1500], as used in the oracle gate."""
    iats = rng.lognormal(mean=-6.0, sigma=1.0, size=n_packets - 1)
    times = np.concatenate([[0.0], np.cumsum(iats)])
    sizes = rng.integers(40, 1501, size=n_packets).astype(np.float64)
    return make_window(times, sizes, params)
