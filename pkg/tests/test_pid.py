import math

import pytest
from hypothesis import given, strategies as st

from pidcoach.pid import OUTPUT_LIMIT, PidGains, PidMemory, pid_reset, pid_update


def test_zero_error_gives_zero_control():
    control, _ = pid_update(pid_reset(), 0.0, 0.01, PidGains(5.0, 3.0, 1.0))
    assert control == 0.0


def test_pure_proportional():
    control, _ = pid_update(pid_reset(), 0.5, 0.01, PidGains(kp=2.0, ki=0.0, kd=0.0))
    assert control == 1.0


def test_closed_loop_first_order_response():
    # Plant y' = u under pure proportional control tracks 1 - exp(-t).
    gains = PidGains(kp=1.0, ki=0.0, kd=0.0)
    dt = 0.01
    memory = pid_reset()
    y = 0.0
    trace = {}
    for step in range(1, 301):
        u, memory = pid_update(memory, 1.0 - y, dt, gains)
        y += u * dt
        if step in (100, 200, 300):
            trace[step * dt] = y
    for t, value in trace.items():
        expected = 1.0 - math.exp(-t)
        assert abs(value - expected) / expected < 0.02


def test_reset_clears_history():
    gains = PidGains(1.0, 1.0, 1.0)
    memory = pid_reset()
    for _ in range(50):
        _, memory = pid_update(memory, 2.0, 0.01, gains)
    fresh = pid_reset(memory)
    assert fresh == PidMemory()
    # Same first output as a brand-new controller: no integral or
    # derivative history survives.
    u_fresh, _ = pid_update(fresh, 0.7, 0.01, gains)
    u_new, _ = pid_update(pid_reset(), 0.7, 0.01, gains)
    assert u_fresh == u_new


def test_reset_idempotent():
    assert pid_reset(pid_reset()) == pid_reset()


def test_reset_after_saturated_run_zeroes_integral():
    gains = PidGains(1.0, 2.0, 0.0)
    memory = pid_reset()
    for _ in range(10_000):
        _, memory = pid_update(memory, 5.0, 0.01, gains)
    assert memory.integral > 0.0
    assert pid_reset(memory).integral == 0.0


def test_windup_integral_grows_linearly_under_saturation():
    # No anti-windup by design: with a constant error the integral grows
    # without bound even though the output pinned at the limit long ago.
    gains = PidGains(kp=1.0, ki=0.5, kd=0.0)
    dt = 0.01
    error = 3.0
    memory = pid_reset()
    checkpoints = {}
    for step in range(1, 10_001):
        control, memory = pid_update(memory, error, dt, gains)
        if step in (1000, 5000, 10_000):
            checkpoints[step] = (control, memory.integral)
    for step, (control, integral) in checkpoints.items():
        assert integral == pytest.approx(error * dt * step)
        assert control == OUTPUT_LIMIT


@given(
    errors=st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=50),
    kp=st.floats(0.0, 100.0),
    ki=st.floats(0.0, 100.0),
    kd=st.floats(0.0, 100.0),
)
def test_output_always_within_limits(errors, kp, ki, kd):
    if kp == ki == kd == 0.0:
        kp = 1.0
    gains = PidGains(kp, ki, kd)
    memory = pid_reset()
    for e in errors:
        control, memory = pid_update(memory, e, 0.01, gains)
        assert -OUTPUT_LIMIT <= control <= OUTPUT_LIMIT


@given(
    history=st.lists(st.floats(-10, 10), max_size=20),
    error=st.floats(-100, 100),
    kp=st.floats(0.01, 50.0),
)
def test_memoryless_when_only_proportional(history, error, kp):
    gains = PidGains(kp=kp, ki=0.0, kd=0.0)
    memory = pid_reset()
    for e in history:
        _, memory = pid_update(memory, e, 0.01, gains)
    with_history, _ = pid_update(memory, error, 0.01, gains)
    fresh, _ = pid_update(pid_reset(), error, 0.01, gains)
    assert with_history == fresh


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        pid_update(pid_reset(), math.nan, 0.01, PidGains(1, 0, 0))
    with pytest.raises(ValueError):
        pid_update(pid_reset(), 0.0, 0.0, PidGains(1, 0, 0))
    with pytest.raises(ValueError):
        PidGains(-1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        PidGains(0.0, 0.0, 0.0)
