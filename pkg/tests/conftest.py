import pytest

from annsim.core import Params, Point
from annsim.harness import DatasetSpec, gen_database
from annsim.randomness import TAG_DATA, PublicCoin, coin_for_trial


@pytest.fixture
def coin():
    return coin_for_trial(424242, 0, 0)


def make_params(n=32, d=64, gamma=4.0, k=2, c1=8.0, c2=8.0, **kw):
    return Params(n=n, d=d, gamma=gamma, k=k, c1=c1, c2=c2, **kw)


def make_instance(n=32, d=64, seed=1, dataset=DatasetSpec(), trial=0):
    data_seed = PublicCoin(seed).stream_key(TAG_DATA, trial)
    return gen_database(n, d, dataset, seed=data_seed)


def point_from_bits(bits: str) -> Point:
    """Point from a coordinate string, coordinate 0 first."""
    return Point(len(bits), sum(1 << i for i, b in enumerate(bits) if b == "1"))
