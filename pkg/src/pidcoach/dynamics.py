"""Continuous-time cart-pendulum dynamics integrated with fixed-step RK4.

Two mechanisms are modeled, both frictionless and actuated only by a
horizontal force on the cart:

* cart-pole: a cart of mass M carrying a single pendulum, modeled as a
  point mass m at the end of a massless rod of length L;
* double pendulum on a cart: two point masses on massless links, the lower
  link hinged on the cart, the upper link hinged on the lower mass.

Angles are measured from the upright vertical (0 = upright, positive =
counterclockwise) and are never wrapped; episodes terminate long before
+-pi. With zero force the dynamics conserve total mechanical energy, which
the test suite uses as an independent correctness oracle.

All functions are pure and operate on plain float tuples, so they are safe
to call from any number of concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple


class CartPoleState(NamedTuple):
    """Generalized coordinates and velocities of the single cart-pole."""

    x: float
    x_dot: float
    theta: float
    theta_dot: float


class DoubleCartPoleState(NamedTuple):
    """Coordinates of the cart-mounted double pendulum.

    theta1 is the lower link (hinged on the cart), theta2 the upper link;
    both angles are absolute, measured from upright.
    """

    x: float
    theta1: float
    theta2: float
    x_dot: float
    theta1_dot: float
    theta2_dot: float


@dataclass(frozen=True)
class MechanismParams:
    """Physical constants plus the integrator step.

    pole_masses/pole_lengths hold one entry for the cart-pole and two for
    the double pendulum (lower link first). Lengths are full link lengths,
    i.e. the distance from a hinge to its point mass.
    """

    cart_mass: float = 1.0
    pole_masses: Tuple[float, ...] = (0.1,)
    pole_lengths: Tuple[float, ...] = (0.6,)
    gravity: float = 9.81
    dt: float = 0.01
    force_limit: float = 10.0

    def __post_init__(self) -> None:
        if len(self.pole_masses) != len(self.pole_lengths):
            raise ValueError("pole_masses and pole_lengths must have equal length")
        values = (self.cart_mass, self.gravity, self.dt, *self.pole_masses, *self.pole_lengths)
        if any(not math.isfinite(v) or v <= 0.0 for v in values):
            raise ValueError("masses, lengths, gravity and dt must be positive finite")
        if not math.isfinite(self.force_limit) or self.force_limit <= 0.0:
            raise ValueError("force_limit must be positive finite")


def single_pendulum_params(**overrides) -> MechanismParams:
    """Default constants for the cart-pole mechanism."""
    return MechanismParams(pole_masses=(0.1,), pole_lengths=(0.6,), **overrides)


def double_pendulum_params(**overrides) -> MechanismParams:
    """Default constants for the double pendulum on a cart."""
    return MechanismParams(pole_masses=(0.1, 0.1), pole_lengths=(0.6, 0.6), **overrides)


def _check_inputs(state, force: float, params: MechanismParams) -> None:
    if not all(math.isfinite(v) for v in state):
        raise ValueError(f"non-finite state {state!r}")
    if not math.isfinite(force):
        raise ValueError("non-finite force")
    if abs(force) > params.force_limit + 1e-12:
        raise ValueError(f"|force|={abs(force)} exceeds force_limit={params.force_limit}")


def cartpole_derivatives(
    state: CartPoleState, force: float, params: MechanismParams
) -> Tuple[float, float, float, float]:
    """Time derivative (x_dot, x_ddot, theta_dot, theta_ddot) of the cart-pole.

    Closed-form solution of the 2x2 Lagrangian system for a point-mass
    pendulum on a frictionless cart.
    """
    _check_inputs(state, force, params)
    m = params.pole_masses[0]
    length = params.pole_lengths[0]
    total = params.cart_mass + m
    s = math.sin(state.theta)
    c = math.cos(state.theta)
    denom = params.cart_mass + m * s * s
    x_ddot = (force + m * s * (length * state.theta_dot**2 - params.gravity * c)) / denom
    theta_ddot = (
        -force * c - m * length * state.theta_dot**2 * s * c + total * params.gravity * s
    ) / (length * denom)
    return (state.x_dot, x_ddot, state.theta_dot, theta_ddot)


def _solve3_symmetric(a, b, c, d, e, f, r1, r2, r3):
    """Solve the symmetric system [[a,b,c],[b,d,e],[c,e,f]] q = r by cofactors."""
    c11 = d * f - e * e
    c12 = e * c - b * f
    c13 = b * e - d * c
    det = a * c11 + b * c12 + c * c13
    if abs(det) < 1e-12 * max(abs(a), abs(d), abs(f)) ** 3 or not math.isfinite(det):
        raise ValueError("mass matrix numerically singular (dynamics bug?)")
    c22 = a * f - c * c
    c23 = b * c - a * e
    c33 = a * d - b * b
    q1 = (c11 * r1 + c12 * r2 + c13 * r3) / det
    q2 = (c12 * r1 + c22 * r2 + c23 * r3) / det
    q3 = (c13 * r1 + c23 * r2 + c33 * r3) / det
    return q1, q2, q3


def double_derivatives(
    state: DoubleCartPoleState, force: float, params: MechanismParams
) -> Tuple[float, float, float, float, float, float]:
    """Time derivative of the double pendulum state.

    Accelerations come from solving the 3x3 mass-matrix system
    H(q) q_ddot = rhs(q, q_dot, force) at every evaluation.
    """
    _check_inputs(state, force, params)
    m1, m2 = params.pole_masses
    l1, l2 = params.pole_lengths
    g = params.gravity
    s1, c1 = math.sin(state.theta1), math.cos(state.theta1)
    s2, c2 = math.sin(state.theta2), math.cos(state.theta2)
    s12 = math.sin(state.theta1 - state.theta2)
    c12 = math.cos(state.theta1 - state.theta2)

    h11 = params.cart_mass + m1 + m2
    h12 = (m1 + m2) * l1 * c1
    h13 = m2 * l2 * c2
    h22 = (m1 + m2) * l1 * l1
    h23 = m2 * l1 * l2 * c12
    h33 = m2 * l2 * l2

    w1 = state.theta1_dot**2
    w2 = state.theta2_dot**2
    r1 = force + (m1 + m2) * l1 * s1 * w1 + m2 * l2 * s2 * w2
    r2 = -m2 * l1 * l2 * s12 * w2 + (m1 + m2) * g * l1 * s1
    r3 = m2 * l1 * l2 * s12 * w1 + m2 * g * l2 * s2

    x_ddot, th1_ddot, th2_ddot = _solve3_symmetric(h11, h12, h13, h22, h23, h33, r1, r2, r3)
    return (state.x_dot, state.theta1_dot, state.theta2_dot, x_ddot, th1_ddot, th2_ddot)


def _derivative_fn(state):
    if isinstance(state, CartPoleState):
        return cartpole_derivatives
    if isinstance(state, DoubleCartPoleState):
        return double_derivatives
    raise TypeError(f"unsupported state type {type(state).__name__}")


def rk4_step(state, force: float, params: MechanismParams):
    """Advance one classical RK4 step of size params.dt, force held constant.

    Returns a new state of the same type; the input is not modified.
    """
    derivs = _derivative_fn(state)
    dt = params.dt
    half = 0.5 * dt
    cls = type(state)

    k1 = derivs(state, force, params)
    k2 = derivs(cls(*(s + half * k for s, k in zip(state, k1))), force, params)
    k3 = derivs(cls(*(s + half * k for s, k in zip(state, k2))), force, params)
    k4 = derivs(cls(*(s + dt * k for s, k in zip(state, k3))), force, params)
    sixth = dt / 6.0
    return cls(
        *(s + sixth * (a + 2.0 * (b + c) + d) for s, a, b, c, d in zip(state, k1, k2, k3, k4))
    )
