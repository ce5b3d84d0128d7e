import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eprsim import sampling


def draw(rng, n):
    return rng.random(n)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 300000), st.integers(0, 2**63 - 1), st.integers(2, 8))
def test_output_independent_of_worker_count(shots, seed, workers):
    a = sampling.run_sharded(draw, shots, seed, "t", workers=1)
    b = sampling.run_sharded(draw, shots, seed, "t", workers=workers)
    assert a.shape == (shots,)
    assert np.array_equal(a, b)


def test_streams_and_seeds_differ():
    a = sampling.run_sharded(draw, 1000, 1, "a")
    assert not np.array_equal(a, sampling.run_sharded(draw, 1000, 1, "b"))
    assert not np.array_equal(a, sampling.run_sharded(draw, 1000, 2, "a"))


def test_prefix_stability():
    # the first chunk does not depend on how many chunks follow
    short = sampling.run_sharded(draw, 1000, 5, "p")
    long = sampling.run_sharded(draw, 3 * sampling.CHUNK_SHOTS, 5, "p")
    assert np.array_equal(short, long[:1000])


def test_chunk_sizes():
    c = sampling.CHUNK_SHOTS
    assert sampling.chunk_sizes(2 * c + 3) == [c, c, 3]
    assert sampling.chunk_sizes(c) == [c]
    assert sum(sampling.chunk_sizes(10**6)) == 10**6


def test_argument_checks():
    with pytest.raises(ValueError):
        sampling.run_sharded(draw, 10, None, "x")
    with pytest.raises(ValueError):
        sampling.run_sharded(draw, 0, 1, "x")
    with pytest.raises(ValueError):
        sampling.resolve_workers(0)


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv(sampling.WORKERS_ENV, "6")
    assert sampling.resolve_workers() == 6
    assert sampling.resolve_workers(2) == 2
    monkeypatch.delenv(sampling.WORKERS_ENV)
    assert sampling.resolve_workers() == 1


def test_stream_id_is_stable():
    assert sampling.stream_id("chsh/0") == sampling.stream_id("chsh/0")
    assert sampling.stream_id("chsh/0") != sampling.stream_id("chsh/1")


def test_categorical_frequencies():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    idx = sampling.sample_categorical(p, np.random.default_rng(0), 200000)
    freq = np.bincount(idx, minlength=4) / 200000
    assert np.all(np.abs(freq - p) < 4 * np.sqrt(p * (1 - p) / 200000))
