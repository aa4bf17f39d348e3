import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffaug.schedule import (NoiseSchedule, make_cosine_schedule, make_linear_schedule,
                              schedule_from_dict)


def cosine_f(t, T, s):
    return math.cos(((t / T + s) / (1 + s)) * math.pi / 2) ** 2


def test_linear_two_steps():
    sched = make_linear_schedule(2, 0.1, 0.1)
    np.testing.assert_allclose(sched.betas, [0.1, 0.1])
    np.testing.assert_allclose(sched.alpha_bars, [0.9, 0.81], rtol=1e-14)


def test_linear_three_halves():
    sched = make_linear_schedule(3, 0.5, 0.5)
    assert sched.alpha_bars[2] == pytest.approx(0.125, rel=1e-14)


@pytest.mark.parametrize("args", [(2, 0.5, 0.1), (4, 0.0, 0.1), (4, 0.1, 1.0), (0, 0.1, 0.2)])
def test_linear_rejects_bad_bounds(args):
    with pytest.raises(ValueError):
        make_linear_schedule(*args)


@pytest.mark.parametrize("T,s", [(1, 0.008), (0, 0.008), (10, 0.0), (10, 1.0), (10, -0.1)])
def test_cosine_rejects_bad_arguments(T, s):
    with pytest.raises(ValueError):
        make_cosine_schedule(T, s)


def test_cosine_first_step_normalisation():
    sched = make_cosine_schedule(100, 0.008)
    assert sched.alpha_bars[0] == pytest.approx(1.0 - sched.betas[0], abs=1e-12)
    assert sched.alpha_bars[0] == pytest.approx(cosine_f(1, 100, 0.008) / cosine_f(0, 100, 0.008),
                                                abs=1e-6)


def test_cosine_matches_closed_form_before_clipping():
    T, s = 100, 0.008
    sched = make_cosine_schedule(T, s)
    unclipped = sched.betas < 0.999
    for t in np.flatnonzero(unclipped)[: T - 5]:
        expected = cosine_f(t + 1, T, s) / cosine_f(0, T, s)
        assert sched.alpha_bars[t] == pytest.approx(expected, rel=1e-10)


def test_cosine_terminal_is_near_white_noise():
    T, s = 100, 0.008
    assert cosine_f(T, T, s) / cosine_f(0, T, s) < 0.01
    assert make_cosine_schedule(T, s).alpha_bars[-1] < 0.01


def check_invariants(sched: NoiseSchedule):
    assert np.all((sched.betas > 0) & (sched.betas < 1))
    assert np.all((sched.alphas > 0) & (sched.alphas < 1))
    assert np.all((sched.alpha_bars > 0) & (sched.alpha_bars <= 1))
    assert np.all(np.diff(sched.alpha_bars) < 0)
    prod = 1.0
    for t in range(sched.T):
        prod *= 1.0 - float(sched.betas[t])
        assert abs(sched.alpha_bars[t] - prod) / sched.alpha_bars[t] < 1e-10
    np.testing.assert_array_equal(sched.sigmas, np.sqrt(sched.betas))


@settings(max_examples=40, deadline=None)
@given(T=st.integers(2, 1500), s=st.floats(1e-4, 0.5))
def test_cosine_invariants(T, s):
    check_invariants(make_cosine_schedule(T, s))


@settings(max_examples=40, deadline=None)
@given(T=st.integers(1, 1000), lo=st.floats(1e-5, 0.2), span=st.floats(0, 0.5))
def test_linear_invariants(T, lo, span):
    check_invariants(make_linear_schedule(T, lo, lo + span))


@pytest.mark.parametrize("T", [50, 200, 1000])
def test_cosine_endpoint_for_long_schedules(T):
    assert make_cosine_schedule(T, 0.008).alpha_bars[-1] < 0.01


def test_schedule_is_read_only():
    sched = make_cosine_schedule(10)
    with pytest.raises(ValueError):
        sched.betas[0] = 0.5


def test_dict_round_trip():
    for sched in (make_cosine_schedule(30, 0.01), make_linear_schedule(5, 0.1, 0.2)):
        again = schedule_from_dict(sched.to_dict())
        np.testing.assert_array_equal(again.betas, sched.betas)


def test_check_t_bounds():
    sched = make_cosine_schedule(10)
    sched.check_t(np.arange(10))
    with pytest.raises(ValueError):
        sched.check_t(10)
    with pytest.raises(ValueError):
        sched.check_t(-1)
