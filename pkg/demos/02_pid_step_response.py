#!/usr/bin/env python3
"""Step response of the PID controller, and the windup that makes it a
deliberately weak coach.

Part 1 closes the loop around the toy plant y' = u and compares the
proportional-only response with the analytic first-order curve.

Part 2 holds the error constant: with no anti-windup the integral grows
linearly forever while the output sits pinned at the actuator limit. That
unbounded accumulation is exactly why the standalone controller eventually
loses the pendulum.
"""

import math

from pidcoach import PidGains, pid_reset, pid_update

DT = 0.01

print("Part 1: tracking a unit setpoint on y' = u with kp=1")
gains = PidGains(kp=1.0, ki=0.0, kd=0.0)
memory = pid_reset()
y = 0.0
print(f"  {'t':>4}  {'y':>8}  {'1-exp(-t)':>10}")
for step in range(1, 301):
    u, memory = pid_update(memory, 1.0 - y, DT, gains)
    y += u * DT
    if step % 100 == 0:
        t = step * DT
        print(f"  {t:4.1f}  {y:8.4f}  {1 - math.exp(-t):10.4f}")

print("\nPart 2: integral windup under a constant error of 3.0 (kp=1, ki=0.5)")
gains = PidGains(kp=1.0, ki=0.5, kd=0.0)
memory = pid_reset()
print(f"  {'step':>6}  {'output':>7}  {'integral':>10}")
for step in range(1, 10_001):
    control, memory = pid_update(memory, 3.0, DT, gains)
    if step in (10, 100, 1000, 10_000):
        print(f"  {step:6d}  {control:7.2f}  {memory.integral:10.1f}")
print("  output saturated at 10 long ago; the integral never stopped growing.")
