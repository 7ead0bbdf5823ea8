"""Reduced-attitude feedback laws in the spinning body frame.

All laws steer the spin axis Gamma = R2 e3 toward a desired direction
Gamma_d.  The commanded planar rate is

    omega_d = k_p * E2 (e3 x R2^T Gamma_d),

which points along the geodesic from Gamma to Gamma_d whenever the two are
not collinear.  Four laws are provided:

- conventional:      u = -A_sym w + omega_d
- sp:                u = -A_sym w - A omega_d + omega_d_dot
                     (keeps the gyroscopic coupling in the closed loop, whose
                     error dynamics become the damped gyroscope w_e' = A w_e)
- sp_motor:          v = u_d + tau_m * u_d_dot, lead-compensating a first
                     order actuator, with the angular acceleration taken from
                     the realized torque
- sp_motor_observer: same lead compensation, but every quantity that needs
                     the unmeasurable realized torque uses the observer
                     estimate u_hat instead

with A_sym = k_d I, A = A_skw - A_sym.  Gain conditions guaranteeing
almost-global asymptotic stability are evaluated by gain_check().
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import CtlState, skew_coupling
from .geom import E3, lift_xy, project_xy


class ControlLaw(str, Enum):
    CONVENTIONAL = "conventional"
    SP = "sp"
    SP_MOTOR = "sp_motor"
    SP_MOTOR_OBSERVER = "sp_motor_observer"


@dataclass(frozen=True)
class Gains:
    """Proportional and derivative gains [1/s]; both must be positive.

    The defaults are tuned against the default body so that, from a
    horizontal spin axis at rest, the structure-preserving loop settles well
    under 3 s along a near-geodesic path while the conventional loop traces
    the long curved sweep characteristic of uncompensated gyroscopic
    coupling.
    """

    k_p: float = 33.0
    k_d: float = 21.5

    def __post_init__(self):
        if not (self.k_p > 0.0 and self.k_d > 0.0):
            raise ValueError("gains must be positive")


@dataclass(frozen=True)
class CtlMatrices:
    """Constant 2x2 matrices entering the laws.

    a_skw is the gyroscopic coupling, a_sym = diag(k_d, k_d), a their
    difference (eigenvalues -k_d +/- i k), and a_m = -I/tau_m the actuator
    dynamics matrix.
    """

    a_skw: np.ndarray
    a_sym: np.ndarray
    a: np.ndarray
    a_m: np.ndarray
    tau_m: float


def ctl_matrices(gains: Gains, k_body, tau_m):
    a_skw = skew_coupling(k_body)
    a_sym = np.diag([gains.k_d, gains.k_d])
    return CtlMatrices(a_skw=a_skw, a_sym=a_sym, a=a_skw - a_sym,
                       a_m=np.diag([-1.0 / tau_m, -1.0 / tau_m]), tau_m=tau_m)


@dataclass(frozen=True)
class RefAttitude:
    """Desired reduced attitude: any rotation r_d whose third column is gamma_d."""

    r_d: np.ndarray
    gamma_d: np.ndarray

    def __post_init__(self):
        if np.linalg.norm(self.r_d[:, 2] - self.gamma_d) > 1e-12:
            raise ValueError("r_d e3 must equal gamma_d")

    @classmethod
    def from_direction(cls, gamma_d):
        from .geom import align_e3, as_unit
        gamma_d = as_unit(gamma_d)
        r_d = align_e3(gamma_d)
        return cls(r_d=r_d, gamma_d=np.array(r_d[:, 2]))

    @classmethod
    def from_rotation(cls, r_d):
        r_d = np.asarray(r_d, dtype=float)
        return cls(r_d=r_d, gamma_d=np.array(r_d[:, 2]))


def omega_d(r2, ref: RefAttitude, k_p):
    """Commanded planar rate k_p E2 (e3 x R2^T Gamma_d).

    Vanishes when Gamma and Gamma_d are collinear (aligned or antipodal).
    """
    y = r2.T @ ref.gamma_d
    return k_p * project_xy(np.cross(E3, y))


def omega_d_dot(r2, omega2, ref: RefAttitude, k_p):
    """Time derivative of omega_d along R2_dot = R2 hat(omega2).

    omega2 is the full body rate; passing a planar lift instead evaluates the
    derivative of the spin-suppressed model used by the linearization.
    """
    y = r2.T @ ref.gamma_d
    return k_p * project_xy(np.cross(E3, np.cross(y, omega2)))


def omega_d_ddot(r2, omega2, omega_dot_xy, ref: RefAttitude, k_p):
    """Second time derivative of omega_d.

    Needs the planar angular acceleration omega_dot_xy, which is not measured
    in flight; callers supply it from the realized torque or an observer
    estimate.  omega2 selects the rate convention exactly as in omega_d_dot.
    """
    y = r2.T @ ref.gamma_d
    w = np.asarray(omega2, dtype=float)
    term = np.cross(w, np.cross(w, y)) + np.cross(y, lift_xy(omega_dot_xy))
    return k_p * project_xy(np.cross(E3, term))


def control_conventional(omega, omega_d_val, gains: Gains):
    """Geometric PD law u = -A_sym w + omega_d."""
    return -gains.k_d * np.asarray(omega, dtype=float) + omega_d_val


def control_sp(omega, omega_d_val, omega_d_dot_val, gains: Gains, mats: CtlMatrices):
    """Structure-preserving law u = -A_sym w - A omega_d + omega_d_dot."""
    return (-gains.k_d * np.asarray(omega, dtype=float)
            - mats.a @ omega_d_val + omega_d_dot_val)


def _lead_compensated(omega, u_est, r2, omega2, ref, gains, mats, planar_feedforward):
    """Shared body of the motor-compensating laws.

    u_est is the realized torque (sp_motor) or its observer estimate
    (sp_motor_observer); the angular acceleration estimate is
    w_dot = A_skw w + u_est.  planar_feedforward selects the rate entering
    the quadratic term of the commanded-rate second derivative: the planar
    lift (default) or, when False, the full body rate including spin.  Both
    stabilize; the full-rate form is the exact signal derivative.
    """
    od = omega_d(r2, ref, gains.k_p)
    odd = omega_d_dot(r2, omega2, ref, gains.k_p)
    u_d = control_sp(omega, od, odd, gains, mats)

    omega_dot = mats.a_skw @ omega + u_est
    w_for_ddot = lift_xy(omega) if planar_feedforward else omega2
    oddd = omega_d_ddot(r2, w_for_ddot, omega_dot, ref, gains.k_p)
    u_d_dot = -gains.k_d * omega_dot - mats.a @ odd + oddd
    # v = u_d - A_m^{-1} u_d_dot and A_m^{-1} = -tau_m I
    return u_d + mats.tau_m * u_d_dot


def control_sp_motor(state: CtlState, r2, omega2, ref: RefAttitude,
                     gains: Gains, mats: CtlMatrices, planar_feedforward=True):
    """Motor-compensating command using the realized torque state.u."""
    return _lead_compensated(state.omega, state.u, r2, omega2, ref, gains,
                             mats, planar_feedforward)


def control_sp_observer(state: CtlState, r2, omega2, ref: RefAttitude,
                        gains: Gains, mats: CtlMatrices, planar_feedforward=True):
    """Motor-compensating command using the observer estimate state.u_hat.

    With u_hat == u this reduces exactly to control_sp_motor.
    """
    return _lead_compensated(state.omega, state.u_hat, r2, omega2, ref, gains,
                             mats, planar_feedforward)


def observer_update(u_hat, v_cmd, tau_m, dt):
    """One step of the torque observer u_hat_dot = A_m (u_hat - v).

    The update is the exact solution over dt with v held fixed, so the
    observer error u - u_hat decays as exp(-t/tau_m) against an actuator
    integrated the same way.
    """
    if not dt > 0.0:
        raise ValueError("observer step must be positive")
    u_hat = np.asarray(u_hat, dtype=float)
    v = np.asarray(v_cmd, dtype=float)
    return v + (u_hat - v) * math.exp(-dt / tau_m)


@dataclass(frozen=True)
class GainCheck:
    """Outcome of a stability gain condition.

    minors holds the chain of upper-left determinants of -Q from the law's
    quadratic bound (for the conventional law there is no Q and the chain
    degenerates to the damping coefficient).  margin is the distance of k_d
    above the law's critical value; the check passes only when it is
    strictly positive and k_p > 0.
    """

    ok: bool
    margin: float
    boundary: float
    minors: tuple


def gain_check(law, gains: Gains, tau_m=None):
    """Evaluate the stability condition of the selected law.

    conventional:       k_p > 0, k_d > 0
    sp:                 k_p > 0, k_d > 1/4
    sp_motor(+observer): k_p > 0, k_d > (1 + tau_m)/4
    """
    law = ControlLaw(law)
    k_d = gains.k_d
    if law is ControlLaw.CONVENTIONAL:
        boundary = 0.0
        minors = (k_d,)
    elif law is ControlLaw.SP:
        boundary = 0.25
        minors = (1.0, k_d - 0.25)
    else:
        if tau_m is None:
            raise ValueError("motor-compensating laws need tau_m")
        boundary = (1.0 + tau_m) / 4.0
        # det(-Q) factored so the chain crosses zero exactly at the boundary
        minors = (1.0, k_d - 0.25, (k_d - boundary) / tau_m)
    margin = k_d - boundary
    ok = gains.k_p > 0.0 and margin > 0.0
    return GainCheck(ok=ok, margin=margin, boundary=boundary, minors=minors)


__all__ = [
    "ControlLaw", "Gains", "CtlMatrices", "RefAttitude", "ctl_matrices",
    "omega_d", "omega_d_dot", "omega_d_ddot",
    "control_conventional", "control_sp", "control_sp_motor",
    "control_sp_observer", "observer_update", "gain_check", "GainCheck",
]
