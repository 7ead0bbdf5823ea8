"""Continuous-time models of the spinning body and a group-based integrator.

The body is axisymmetric with inertia J = diag(j_sym, j_sym, j_zz) and spins
about its z axis at a steady rate.  Three model layers are provided:

1. Full rigid body on SO(3) x R^3:

       R_dot   = R * hat(omega)
       J w_dot = M - w x (J w)

2. Planar reduction in the body frame (valid while the spin stays steady and
   the z torque is zero): with w = [wx, wy] and specific torque u = M_xy/j_sym,

       w_dot = A_skw w + u,    A_skw = [[0, -k], [k, 0]]

   where k = (j_zz - j_sym) * spin_rate / j_sym is the gyroscopic coupling.

3. The same reduction written in a non-spinning (despun) frame, which swaps k
   for k_despun = j_zz / j_sym * spin_rate.

Actuators are first order:  u_dot = -(u - v) / tau_m  with commanded v.

The default attitude integrator advances the attitude by a group element and
the momentum by a discrete balance law, so orthogonality is preserved by
construction and the torque-free momentum magnitude is conserved to roundoff.
A classical Runge-Kutta step on the algebra with exponential reconstruction
is available as a cross-check via ``method="rk4"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergenceError
from .geom import E3, exp_so3, lift_xy

# Bench-characterized defaults for the simulated vehicle: inertia
# [1.55, 1.55, 2.76]e-2 kg m^2, 0.0846 s motor lag, ~1500 deg/s steady spin.
DEFAULT_J_SYM = 1.55e-2
DEFAULT_J_ZZ = 2.76e-2
DEFAULT_SPIN_RATE = 26.18
DEFAULT_TAU_M = 0.0846


@dataclass(frozen=True)
class BodyParams:
    """Inertia, steady spin rate and actuator lag of the vehicle.

    Attributes
    ----------
    j_sym : float
        Principal inertia about any axis in the symmetry plane [kg m^2].
    j_zz : float
        Inertia about the spin axis [kg m^2].
    spin_rate : float
        Steady spin rate about the body z axis [rad/s].
    tau_m : float
        Motor (torque actuator) time constant [s].
    """

    j_sym: float = DEFAULT_J_SYM
    j_zz: float = DEFAULT_J_ZZ
    spin_rate: float = DEFAULT_SPIN_RATE
    tau_m: float = DEFAULT_TAU_M

    def __post_init__(self):
        if not (self.j_sym > 0.0 and self.j_zz > 0.0):
            raise ValueError("principal inertias must be positive")
        if not self.tau_m > 0.0:
            raise ValueError("motor time constant must be positive")

    @property
    def inertia(self):
        """Body inertia matrix diag(j_sym, j_sym, j_zz)."""
        return np.diag([self.j_sym, self.j_sym, self.j_zz])

    @property
    def inertia_diag(self):
        return np.array([self.j_sym, self.j_sym, self.j_zz])

    def coeffs(self):
        return GyroCoeffs.from_body(self)


@dataclass(frozen=True)
class GyroCoeffs:
    """Gyroscopic coupling frequencies of the planar reductions [rad/s].

    ``k_body`` drives the body-frame reduction, ``k_despun`` the non-spinning
    frame one; both are fixed by the inertias and the steady spin rate.
    """

    k_body: float
    k_despun: float

    @classmethod
    def from_body(cls, params: BodyParams):
        k_body = (params.j_zz - params.j_sym) * params.spin_rate / params.j_sym
        k_despun = params.j_zz / params.j_sym * params.spin_rate
        return cls(k_body=k_body, k_despun=k_despun)


@dataclass(frozen=True)
class RigidState:
    """Full attitude state: rotation r2 (body to inertial) and body rates."""

    r2: np.ndarray      # 3x3 rotation
    omega2: np.ndarray  # body angular velocity [rad/s]

    @property
    def gamma(self):
        """Spin-axis direction in the inertial frame (third column of r2)."""
        return np.array(self.r2[:, 2])

    def momentum(self, params: BodyParams):
        """Body-frame angular momentum J w."""
        return params.inertia_diag * self.omega2

    def kinetic_energy(self, params: BodyParams):
        return 0.5 * float(self.omega2 @ (params.inertia_diag * self.omega2))


@dataclass
class CtlState:
    """Planar quantities owned by the control loop.

    omega is the xy body rate, u the realized specific torque and u_hat the
    observer's estimate of u (all 2-vectors).
    """

    omega: np.ndarray
    u: np.ndarray
    u_hat: np.ndarray


def skew_coupling(k):
    """The 2x2 gyroscopic coupling matrix [[0, -k], [k, 0]]."""
    return np.array([[0.0, -k], [k, 0.0]])


def body_rates_deriv(omega, u, coeffs: GyroCoeffs):
    """Planar body-frame rate derivative A_skw w + u."""
    k = coeffs.k_body
    return np.array([-k * omega[1] + u[0], k * omega[0] + u[1]])


def despun_rates_deriv(omega_bar, u_bar, coeffs: GyroCoeffs):
    """Planar rate derivative in the non-spinning frame (coupling k_despun)."""
    k = coeffs.k_despun
    return np.array([-k * omega_bar[1] + u_bar[0], k * omega_bar[0] + u_bar[1]])


def euler_deriv(state: RigidState, torque, params: BodyParams):
    """Full rigid-body state derivative.

    Returns
    -------
    (body_rate, omega2_dot)
        The attitude evolves by R_dot = R hat(body_rate) with
        body_rate == state.omega2; omega2_dot solves Euler's equation
        J w_dot = M - w x (J w).
    """
    w = state.omega2
    jw = params.inertia_diag * w
    omega2_dot = (np.asarray(torque, dtype=float) - np.cross(w, jw)) / params.inertia_diag
    return np.array(w), omega2_dot


def motor_deriv(u, v_cmd, tau_m):
    """First-order actuator model u_dot = -(u - v)/tau_m."""
    if not tau_m > 0.0:
        raise ValueError("motor time constant must be positive")
    return -(np.asarray(u, dtype=float) - np.asarray(v_cmd, dtype=float)) / tau_m


def motor_step(u, v_cmd, tau_m, dt):
    """Exact update of the actuator ODE over dt with the command held fixed."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v_cmd, dtype=float)
    return v + (u - v) * math.exp(-dt / tau_m)


# ---------------------------------------------------------------------------
# attitude integrators
# ---------------------------------------------------------------------------

MAX_STEP = 1e-2


def step(state: RigidState, torque, dt, params: BodyParams,
         method="lgvi", max_iter=50, tol=1e-14):
    """Advance the full rigid body by one step of size dt with constant torque.

    method="lgvi" (default) performs the variational group update: the new
    attitude is R @ F with F in SO(3) solved implicitly from the discrete
    momentum balance, which keeps |J w| exactly conserved for zero torque.
    method="rk4" is the explicit Runge-Kutta step on the algebra with
    exponential reconstruction, used as an independent reference.

    Raises NoConvergenceError when the implicit solve does not reach tol
    within max_iter iterations.
    """
    if not 0.0 < dt <= MAX_STEP:
        raise ValueError(f"step size must be in (0, {MAX_STEP}]; got {dt}")
    torque = np.asarray(torque, dtype=float)
    if method == "lgvi":
        return _step_lgvi(state, torque, dt, params, max_iter, tol)
    if method == "rk4":
        return _step_rk4(state, torque, dt, params)
    raise ValueError(f"unknown integrator {method!r}")


def _rodrigues(fx, fy, fz):
    """Rodrigues rotation as nine floats, row major (hot-path of the solver)."""
    t2 = fx * fx + fy * fy + fz * fz
    if t2 < 1e-12:
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
    else:
        t = math.sqrt(t2)
        a = math.sin(t) / t
        b = (1.0 - math.cos(t)) / t2
    # I + a hat(f) + b hat(f)^2 with hat(f)^2 = f f^T - |f|^2 I
    return (1.0 + b * (fx * fx - t2), -a * fz + b * fx * fy, a * fy + b * fx * fz,
            a * fz + b * fx * fy, 1.0 + b * (fy * fy - t2), -a * fx + b * fy * fz,
            -a * fy + b * fx * fz, a * fx + b * fy * fz, 1.0 + b * (fz * fz - t2))


def _project_so3(R):
    # one Newton-Schulz pass R (3I - R^T R)/2; the input is within roundoff of
    # orthogonal, so a single pass squares the defect
    return R @ (1.5 * np.eye(3) - 0.5 * (R.T @ R))


def _step_lgvi(state, torque, dt, params, max_iter, tol):
    j0 = params.j_sym
    j2 = params.j_zz
    # Nonstandard inertia J_d = tr(J)/2 I - J appearing in the group equation;
    # to first order F = exp(hat(f)) gives F J_d - J_d F^T = hat(J f).
    half_tr = j0 + 0.5 * j2
    d0 = half_tr - j0
    d2 = half_tr - j2

    w = state.omega2
    s0 = j0 * w[0] + 0.5 * dt * torque[0]
    s1 = j0 * w[1] + 0.5 * dt * torque[1]
    s2 = j2 * w[2] + 0.5 * dt * torque[2]
    tx, ty, tz = dt * s0, dt * s1, dt * s2

    # Chord iteration on  vee(F J_d - J_d F^T) = dt * s  with the first-order
    # Jacobian J (diagonal); the rotation angle per step is small, so the
    # contraction factor is O(|f|) and a handful of passes reach roundoff.
    fx, fy, fz = tx / j0, ty / j0, tz / j2
    F = None
    for _ in range(max_iter):
        F = _rodrigues(fx, fy, fz)
        g0 = F[7] * d0 - d2 * F[5] - tx
        g1 = F[2] * d2 - d0 * F[6] - ty
        g2 = F[3] * d0 - d0 * F[1] - tz
        if abs(g0) <= tol and abs(g1) <= tol and abs(g2) <= tol:
            break
        fx -= g0 / j0
        fy -= g1 / j0
        fz -= g2 / j2
    else:
        raise NoConvergenceError(
            f"group-element solve stalled: residual {max(abs(g0), abs(g1), abs(g2)):.3e} "
            f"after {max_iter} iterations")

    Fm = np.array(F).reshape(3, 3)
    r2_next = _project_so3(state.r2 @ Fm)
    # discrete momentum balance: J w+ = F^T (J w + dt/2 M) + dt/2 M
    m0 = F[0] * s0 + F[3] * s1 + F[6] * s2 + 0.5 * dt * torque[0]
    m1 = F[1] * s0 + F[4] * s1 + F[7] * s2 + 0.5 * dt * torque[1]
    m2 = F[2] * s0 + F[5] * s1 + F[8] * s2 + 0.5 * dt * torque[2]
    omega2_next = np.array([m0 / j0, m1 / j0, m2 / j2])
    return RigidState(r2=r2_next, omega2=omega2_next)


def _dexpinv(theta, w):
    # inverse right-trivialized tangent of exp, truncated after the
    # commutator terms needed for fourth-order accuracy
    c = np.cross(theta, w)
    return w - 0.5 * c + (1.0 / 12.0) * np.cross(theta, c)


def _step_rk4(state, torque, dt, params):
    j_diag = params.inertia_diag

    def field(theta, w):
        wdot = (torque - np.cross(w, j_diag * w)) / j_diag
        return _dexpinv(theta, w), wdot

    w0 = state.omega2
    th1, dw1 = field(np.zeros(3), w0)
    th2, dw2 = field(0.5 * dt * th1, w0 + 0.5 * dt * dw1)
    th3, dw3 = field(0.5 * dt * th2, w0 + 0.5 * dt * dw2)
    th4, dw4 = field(dt * th3, w0 + dt * dw3)

    theta = (dt / 6.0) * (th1 + 2.0 * th2 + 2.0 * th3 + th4)
    omega2_next = w0 + (dt / 6.0) * (dw1 + 2.0 * dw2 + 2.0 * dw3 + dw4)
    r2_next = _project_so3(state.r2 @ exp_so3(theta))
    return RigidState(r2=r2_next, omega2=omega2_next)


def reconstruct_despun_rates(r_psi_angle, omega2, spin_rate):
    """Planar angular velocity of the non-spinning frame from body data.

    Rotates the body rates through the accumulated spin angle and removes the
    steady spin, giving the rates whose dynamics use k_despun.
    """
    omega1 = exp_so3(r_psi_angle * E3) @ np.asarray(omega2, dtype=float) - spin_rate * E3
    return omega1[:2]


def gamma_deriv(r2, omega_xy):
    """Sphere kinematics of the spin axis: Gamma_dot = Omega x Gamma."""
    omega_inertial = r2 @ lift_xy(omega_xy)
    return np.cross(omega_inertial, r2[:, 2])


__all__ = [
    "BodyParams", "GyroCoeffs", "RigidState", "CtlState",
    "body_rates_deriv", "despun_rates_deriv", "euler_deriv",
    "motor_deriv", "motor_step", "step", "skew_coupling",
    "reconstruct_despun_rates", "gamma_deriv",
    "DEFAULT_J_SYM", "DEFAULT_J_ZZ", "DEFAULT_SPIN_RATE", "DEFAULT_TAU_M",
]
