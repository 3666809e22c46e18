"""Dynamics kernels checked against independent physics oracles.

The energy functions below are derived directly from the kinetic/potential
definitions of the point-mass mechanisms and deliberately do not share code
with pidcoach.dynamics.
"""

import math

import pytest

from pidcoach.dynamics import (
    CartPoleState,
    DoubleCartPoleState,
    cartpole_derivatives,
    double_derivatives,
    double_pendulum_params,
    rk4_step,
    single_pendulum_params,
)


def cartpole_energy(s: CartPoleState, p) -> float:
    m = p.pole_masses[0]
    length = p.pole_lengths[0]
    vx = s.x_dot + length * s.theta_dot * math.cos(s.theta)
    vy = -length * s.theta_dot * math.sin(s.theta)
    kinetic = 0.5 * p.cart_mass * s.x_dot**2 + 0.5 * m * (vx * vx + vy * vy)
    potential = m * p.gravity * length * math.cos(s.theta)
    return kinetic + potential


def double_energy(s: DoubleCartPoleState, p) -> float:
    m1, m2 = p.pole_masses
    l1, l2 = p.pole_lengths
    v1x = s.x_dot + l1 * s.theta1_dot * math.cos(s.theta1)
    v1y = -l1 * s.theta1_dot * math.sin(s.theta1)
    v2x = v1x + l2 * s.theta2_dot * math.cos(s.theta2)
    v2y = v1y - l2 * s.theta2_dot * math.sin(s.theta2)
    kinetic = (
        0.5 * p.cart_mass * s.x_dot**2
        + 0.5 * m1 * (v1x * v1x + v1y * v1y)
        + 0.5 * m2 * (v2x * v2x + v2y * v2y)
    )
    potential = m1 * p.gravity * l1 * math.cos(s.theta1) + m2 * p.gravity * (
        l1 * math.cos(s.theta1) + l2 * math.cos(s.theta2)
    )
    return kinetic + potential


class TestCartPoleDerivatives:
    def test_upright_equilibrium_is_fixed_point(self):
        p = single_pendulum_params()
        assert cartpole_derivatives(CartPoleState(0, 0, 0, 0), 0.0, p) == (0, 0, 0, 0)

    def test_linearized_unstable_mode(self):
        # Hand-linearized about upright: theta_ddot = g (M + m) / (M L) * theta.
        p = single_pendulum_params()
        theta0 = 1e-4
        _, _, _, theta_ddot = cartpole_derivatives(CartPoleState(0, 0, theta0, 0), 0.0, p)
        m = p.pole_masses[0]
        expected = p.gravity * (p.cart_mass + m) / (p.cart_mass * p.pole_lengths[0]) * theta0
        assert abs(theta_ddot - expected) / abs(expected) < 1e-3

    def test_energy_conserved_over_1000_steps(self):
        p = single_pendulum_params()
        s = CartPoleState(0.0, 0.0, 0.15, 0.0)
        e0 = cartpole_energy(s, p)
        for _ in range(1000):
            s = rk4_step(s, 0.0, p)
        assert abs(cartpole_energy(s, p) - e0) / abs(e0) < 1e-6

    def test_mirror_symmetry(self):
        p = single_pendulum_params()
        s = CartPoleState(0.3, -0.2, 0.1, 0.5)
        d = cartpole_derivatives(s, 2.0, p)
        mirrored = CartPoleState(-s.x, -s.x_dot, -s.theta, -s.theta_dot)
        dm = cartpole_derivatives(mirrored, -2.0, p)
        assert dm == tuple(-v for v in d)

    def test_rejects_non_finite_state(self):
        p = single_pendulum_params()
        with pytest.raises(ValueError):
            cartpole_derivatives(CartPoleState(0, 0, math.nan, 0), 0.0, p)
        with pytest.raises(ValueError):
            cartpole_derivatives(CartPoleState(0, 0, 0, 0), math.inf, p)


class TestDoubleDerivatives:
    def test_upright_equilibrium_is_fixed_point(self):
        p = double_pendulum_params()
        s = DoubleCartPoleState(0, 0, 0, 0, 0, 0)
        assert double_derivatives(s, 0.0, p) == (0, 0, 0, 0, 0, 0)

    def test_energy_conserved_over_1000_steps(self):
        # Bounded oscillation about hanging; the whirling regime after a
        # fall from upright is outside RK4's asymptotic range at dt=0.01
        # and is never integrated by the envs (episodes terminate first).
        p = double_pendulum_params()
        s = DoubleCartPoleState(0.0, math.pi + 0.3, math.pi - 0.2, 0.0, 0.0, 0.0)
        e0 = double_energy(s, p)
        for _ in range(1000):
            s = rk4_step(s, 0.0, p)
        assert abs(double_energy(s, p) - e0) / abs(e0) < 1e-5

    def test_mirror_symmetry(self):
        p = double_pendulum_params()
        s = DoubleCartPoleState(0.2, 0.1, -0.3, 0.4, -0.5, 0.6)
        d = double_derivatives(s, 1.5, p)
        mirrored = DoubleCartPoleState(*(-v for v in s))
        dm = double_derivatives(mirrored, -1.5, p)
        for a, b in zip(dm, (-v for v in d)):
            assert a == pytest.approx(b, abs=1e-15)

    def test_rejects_non_finite(self):
        p = double_pendulum_params()
        with pytest.raises(ValueError):
            double_derivatives(DoubleCartPoleState(0, math.inf, 0, 0, 0, 0), 0.0, p)


class TestRk4:
    def test_dt_to_zero_continuity(self):
        p = single_pendulum_params(dt=1e-8)
        s = CartPoleState(0.1, 0.2, 0.05, -0.1)
        out = rk4_step(s, 1.0, p)
        assert max(abs(a - b) for a, b in zip(out, s)) < 1e-6

    def test_matches_fine_euler(self):
        # Reference: explicit-Euler sub-steps fine enough (h=1e-7) that the
        # first-order reference error sits below the 1e-8 tolerance.
        p = single_pendulum_params(dt=0.01)
        h = 1e-7
        s = CartPoleState(0.0, 0.1, 0.1, -0.2)
        force = 3.0
        ref = s
        for _ in range(100_000):
            d = cartpole_derivatives(ref, force, p)
            ref = CartPoleState(*(v + h * dv for v, dv in zip(ref, d)))
        out = rk4_step(s, force, p)
        assert max(abs(a - b) for a, b in zip(out, ref)) < 1e-8

    @pytest.mark.parametrize(
        "make_params, state",
        [
            (single_pendulum_params, CartPoleState(0.0, 0.0, 0.1, 0.0)),
            (
                double_pendulum_params,
                DoubleCartPoleState(0.0, math.pi + 0.15, math.pi - 0.1, 0.0, 0.0, 0.0),
            ),
        ],
    )
    def test_fourth_order_convergence(self, make_params, state):
        # Richardson: halving dt over a fixed 1 s horizon should shrink the
        # endpoint error vs a much finer reference by about 2^4.
        def endpoint(dt):
            p = make_params(dt=dt)
            s = state
            for _ in range(round(1.0 / dt)):
                s = rk4_step(s, 0.0, p)
            return s

        ref = endpoint(1.0 / 4096)
        err_h = max(abs(a - b) for a, b in zip(endpoint(0.01), ref))
        err_h2 = max(abs(a - b) for a, b in zip(endpoint(0.005), ref))
        ratio = err_h / err_h2
        assert 10.0 < ratio < 24.0

    def test_deterministic(self):
        p = double_pendulum_params()
        s = DoubleCartPoleState(0.0, 0.1, -0.05, 0.2, 0.0, 0.3)
        assert rk4_step(s, 1.25, p) == rk4_step(s, 1.25, p)
