import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsube.errors import ConfigError, ContractViolation
from tsube.queueing import TrafficSpec, draw_arrivals, served, step_access, step_processing


def spec(mean=2.1, K=1):
    return TrafficSpec(np.full(K, mean), 2 * max(mean, 1e-12), 8.0, 10.0, 8.0)


def test_arrivals():
    rng = np.random.default_rng(3)
    zero = TrafficSpec(np.zeros(2), 1.0, 8.0, 10.0, 8.0)
    assert np.all(draw_arrivals(zero, rng) == 0)
    s = spec(K=10)
    x = np.stack([draw_arrivals(s, rng) for _ in range(10_000)])  # 1e5 draws
    assert x.mean() == pytest.approx(2.1, rel=0.02)
    assert x.min() >= 0 and x.max() <= 4.2
    a = [draw_arrivals(s, np.random.default_rng(5)) for _ in range(2)]
    np.testing.assert_array_equal(*a)


def test_traffic_validation():
    with pytest.raises(ConfigError) as err:
        TrafficSpec(np.array([2.1]), 4.0, 8.0, 10.0, 8.0)
    assert err.value.key == "traffic.max_arrival"
    with pytest.raises(ConfigError):
        TrafficSpec(np.array([1.0]), 4.0, 9.0, 10.0, 8.0)


def test_step_access_examples():
    assert step_access(5, 2, 1) == 4
    assert step_access(0, 0, 3) == 3
    assert step_access(2.5, 2.5, 0) == 0
    with pytest.raises(ContractViolation):
        step_access(1.0, 1.5, 0.0)
    with pytest.raises(ContractViolation):
        step_access(1.0, -0.1, 0.0)


def test_step_processing_examples():
    assert step_processing(3, 8, 2) == 2
    assert step_processing(10, 8, 0) == 2
    assert step_processing(0, 8, 0) == 0


@given(
    st.lists(st.tuples(st.floats(0, 1), st.floats(0, 4.2)), min_size=1, max_size=40),
    st.floats(0, 10),
    st.floats(0, 10),
)
def test_queue_conservation_and_nonnegativity(steps, qa0, qu0):
    qa, qu = qa0, qu0
    admitted = departed_a = departed_u = 0.0
    for frac, nu in steps:
        r = frac * qa
        s = float(served(qu, 8.0))
        qa_new = step_access(qa, r, nu)
        qu_new = step_processing(qu, 8.0, r)
        assert qa_new >= 0 and qu_new >= 0
        admitted += nu
        departed_a += r
        departed_u += s
        qa, qu = qa_new, qu_new
    assert qa - qa0 == pytest.approx(admitted - departed_a, abs=1e-9)
    assert qu - qu0 == pytest.approx(departed_a - departed_u, abs=1e-9)
