import numpy as np
import pytest

from jncsim.errors import ConfigError, DomainError
from jncsim.topology import (
    NetworkConfig,
    ReceiverProfile,
    build_topology,
    deliver_clean,
    deliver_collided,
    trial_rng,
)


def overlap_ids(cfg):
    return {r.id for r in build_topology(cfg) if r.in_overlap}


@pytest.mark.parametrize("N,M,expect", [(3, 1, {1, 4}), (1, 1, {1, 2}), (5, 2, {1, 2, 6, 7})])
def test_layout(N, M, expect):
    cfg = NetworkConfig(N=N, M=M, p=0.1, B=4)
    rs = build_topology(cfg)
    assert len(rs) == 2 * N
    assert overlap_ids(cfg) == expect
    assert [r.home_ap for r in rs] == [1] * N + [2] * N
    assert sum(r.in_overlap for r in rs) == 2 * M


@pytest.mark.parametrize("kw", [
    dict(N=5, M=6, p=0.1, B=20),
    dict(N=5, M=0, p=0.1, B=20),
    dict(N=0, M=0, p=0.1, B=20),
    dict(N=5, M=2, p=1.5, B=20),
    dict(N=5, M=2, p=-0.1, B=20),
    dict(N=5, M=2, p=0.1, B=0),
])
def test_bad_config(kw):
    with pytest.raises(ConfigError):
        NetworkConfig(**kw)


def test_clean_extremes():
    rng = trial_rng(1, 0)
    assert deliver_clean(50, 0.0, rng).all()
    assert not deliver_clean(50, 1.0, rng).any()


def test_collided_extremes():
    rng = trial_rng(1, 0)
    rs = [ReceiverProfile(1, 1, True), ReceiverProfile(3, 2, True)]
    assert deliver_collided(rs, 0.0, rng).all()
    assert not deliver_collided(rs, 1.0, rng).any()


def test_collided_rejects_outsiders():
    with pytest.raises(DomainError):
        deliver_collided([ReceiverProfile(2, 1, False)], 0.1, trial_rng(1, 0))


def test_streams_reproducible_and_distinct():
    a = trial_rng(7, 3).random(10)
    b = trial_rng(7, 3).random(10)
    d = trial_rng(7, 4).random(10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, d)
