"""Stability analysis and trajectory quality metrics.

Linearization.  The closed loops have exactly two equilibria, spin axis
aligned with or opposite to the desired direction.  Perturbations are
parametrized as

    Gamma = R_eq exp(hat(eta_bar)) e3,   omega = zeta  (planar, eta_bar_z = 0)

and the spin rate enters the local model only through the gyroscopic
coupling k in A_skw (the reduced model the laws are designed against, with
the commanded-rate derivatives evaluated along that model's own kinematics).
The resulting constant block matrices are, with
P(Gamma_eq) = k_p E2 hat(e3) hat(R_eq^T R_d e3) E2^T:

    sp:            S1 = [[0, I], [-A P, A + P]]
    conventional:  S2 = [[0, I], [P, A]]
    sp_motor:      S3 = [[P, I, 0], [0, A, I], [0, 0, A_m]]
                   in coordinates (eta, zeta_e, w_e)

finite_diff_jacobian() differentiates that closed-loop model numerically in
the same coordinates and is the oracle for linearize().
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controllers import (ControlLaw, CtlMatrices, Gains, RefAttitude,
                          control_conventional, control_sp, ctl_matrices,
                          omega_d, omega_d_dot, omega_d_ddot)
from .dynamics import BodyParams, GyroCoeffs
from .errors import InvalidEquilibriumError, SingularSystemError
from .geom import E1, E3, exp_so3, geodesic_angle, hat, lift_xy, project_xy

HURWITZ_TOL = 1e-9


def error_psi(gamma, gamma_d):
    """Configuration error on the sphere, 1 - dot(Gamma_d, Gamma), in [0, 2]."""
    return 1.0 - float(np.asarray(gamma_d, dtype=float) @ np.asarray(gamma, dtype=float))


def lyapunov_value(law, gains: Gains, gamma, gamma_d, omega,
                   omega_d_val=None, u_e=None):
    """Candidate Lyapunov value of the selected law's stability proof.

    conventional: k_p Psi + |w|^2 / 2
    sp:           k_p Psi + |w_e|^2 / 2              (w_e = w - omega_d)
    sp_motor(+observer): adds |u_e|^2 / 2 for the torque error u - u_d.

    Zero exactly at the desired equilibrium.
    """
    law = ControlLaw(law)
    psi = error_psi(gamma, gamma_d)
    omega = np.asarray(omega, dtype=float)
    if law is ControlLaw.CONVENTIONAL:
        return gains.k_p * psi + 0.5 * float(omega @ omega)
    if omega_d_val is None:
        raise ValueError("structure-preserving laws need omega_d_val")
    w_e = omega - omega_d_val
    value = gains.k_p * psi + 0.5 * float(w_e @ w_e)
    if law in (ControlLaw.SP_MOTOR, ControlLaw.SP_MOTOR_OBSERVER):
        if u_e is None:
            raise ValueError("motor-compensating laws need u_e")
        u_e = np.asarray(u_e, dtype=float)
        value += 0.5 * float(u_e @ u_e)
    return value


@dataclass(frozen=True)
class LinMatrix:
    """Closed-loop linearization with labeled perturbation coordinates."""

    matrix: np.ndarray
    labels: tuple
    law: ControlLaw
    gamma_eq: np.ndarray


def _equilibrium_rotation(gamma_eq, ref: RefAttitude):
    """R_eq for the requested equilibrium, or raise InvalidEquilibriumError.

    At the antipode any rotation mapping e3 to -Gamma_d works (the laws are
    invariant to spin about Gamma_d); R_d rotated half a turn about its x
    axis is used.
    """
    gamma_eq = np.asarray(gamma_eq, dtype=float)
    if np.linalg.norm(gamma_eq - ref.gamma_d) <= 1e-9:
        return np.array(ref.r_d)
    if np.linalg.norm(gamma_eq + ref.gamma_d) <= 1e-9:
        return ref.r_d @ exp_so3(math.pi * E1)
    raise InvalidEquilibriumError(
        "equilibria of the closed loop are only +/- gamma_d")


def coupling_matrix(r_eq, ref: RefAttitude, k_p):
    """P(Gamma_eq) = k_p E2 hat(e3) hat(R_eq^T R_d e3) E2^T (2x2)."""
    y = r_eq.T @ ref.gamma_d
    return k_p * (hat(E3) @ hat(y))[:2, :2]


def linearize(law, gamma_eq, ref: RefAttitude, gains: Gains, params: BodyParams):
    """Constant linearization block matrix of the selected law's closed loop.

    The observer variant shares the sp_motor structure (its torque-estimate
    error is autonomous and already stable).
    """
    law = ControlLaw(law)
    r_eq = _equilibrium_rotation(gamma_eq, ref)
    p = coupling_matrix(r_eq, ref, gains.k_p)
    mats = ctl_matrices(gains, params.coeffs().k_body, params.tau_m)
    a = mats.a
    z = np.zeros((2, 2))
    eye = np.eye(2)
    if law is ControlLaw.SP:
        m = np.block([[z, eye], [-a @ p, a + p]])
        labels = ("eta_x", "eta_y", "zeta_x", "zeta_y")
    elif law is ControlLaw.CONVENTIONAL:
        m = np.block([[z, eye], [p, a]])
        labels = ("eta_x", "eta_y", "zeta_x", "zeta_y")
    else:
        m = np.block([[p, eye, z], [z, a, eye], [z, z, mats.a_m]])
        labels = ("eta_x", "eta_y", "zeta_e_x", "zeta_e_y", "w_e_x", "w_e_y")
    return LinMatrix(matrix=m, labels=labels, law=law,
                     gamma_eq=np.asarray(gamma_eq, dtype=float))


def hurwitz(lin):
    """(is_hurwitz, spectrum) of a LinMatrix or plain square matrix.

    Hurwitz means every eigenvalue real part is below -1e-9.
    """
    m = lin.matrix if isinstance(lin, LinMatrix) else np.asarray(lin, dtype=float)
    spectrum = np.linalg.eigvals(m)
    spectrum = spectrum[np.argsort(spectrum.real)]
    return bool(spectrum.real.max() < -HURWITZ_TOL), spectrum


def _closed_loop_model_field(law, x, r_eq, ref, gains: Gains, mats: CtlMatrices):
    """Reduced closed-loop vector field in the perturbation coordinates.

    Kinematics evolve by the planar rates only and every commanded-rate
    derivative is taken along those kinematics, matching the model whose
    Jacobian linearize() assembles.
    """
    eta = x[:2]
    r2 = r_eq @ exp_so3(lift_xy(eta))
    y = r2.T @ ref.gamma_d
    od = gains.k_p * project_xy(np.cross(E3, y))

    if law is ControlLaw.SP_MOTOR:
        zeta_e = x[2:4]
        w_e = x[4:6]
        omega = od + zeta_e
    else:
        omega = x[2:4]

    w_bar = lift_xy(omega)
    od_dot = gains.k_p * project_xy(np.cross(E3, np.cross(y, w_bar)))

    if law is ControlLaw.CONVENTIONAL:
        u = control_conventional(omega, od, gains)
    elif law is ControlLaw.SP:
        u = control_sp(omega, od, od_dot, gains, mats)
    else:
        u_d = control_sp(omega, od, od_dot, gains, mats)
        u = u_d + w_e

    omega_dot = mats.a_skw @ omega + u
    gamma_dot = r2 @ np.cross(w_bar, E3)
    eta_dot = project_xy(np.cross(E3, r_eq.T @ gamma_dot))

    if law is not ControlLaw.SP_MOTOR:
        return np.concatenate([eta_dot, omega_dot])

    od_ddot = gains.k_p * project_xy(np.cross(
        E3, np.cross(w_bar, np.cross(w_bar, y)) + np.cross(y, lift_xy(omega_dot))))
    u_d_dot = -gains.k_d * omega_dot - mats.a @ od_dot + od_ddot
    v = u_d + mats.tau_m * u_d_dot
    u_dot = mats.a_m @ (u - v)
    return np.concatenate([eta_dot, omega_dot - od_dot, u_dot - u_d_dot])


def finite_diff_jacobian(law, gamma_eq, ref: RefAttitude, gains: Gains,
                         params: BodyParams, eps=1e-6):
    """Central-difference Jacobian of the closed-loop model at an equilibrium.

    Independent numerical oracle for linearize(); eps must lie in
    [1e-8, 1e-4].
    """
    if not 1e-8 <= eps <= 1e-4:
        raise ValueError("finite-difference eps must be in [1e-8, 1e-4]")
    law = ControlLaw(law)
    if law is ControlLaw.SP_MOTOR_OBSERVER:
        law = ControlLaw.SP_MOTOR
    r_eq = _equilibrium_rotation(gamma_eq, ref)
    mats = ctl_matrices(gains, GyroCoeffs.from_body(params).k_body, params.tau_m)
    n = 6 if law is ControlLaw.SP_MOTOR else 4
    jac = np.empty((n, n))
    for j in range(n):
        dx = np.zeros(n)
        dx[j] = eps
        f_plus = _closed_loop_model_field(law, dx, r_eq, ref, gains, mats)
        f_minus = _closed_loop_model_field(law, -dx, r_eq, ref, gains, mats)
        jac[:, j] = (f_plus - f_minus) / (2.0 * eps)
    return jac


@dataclass(frozen=True)
class PhasePortrait:
    """Planar rate trajectories of the damped despun-frame reduction."""

    times: np.ndarray
    ics: np.ndarray            # (n, 2) initial rates
    trajectories: np.ndarray   # (n, len(times), 2)
    omega_ss: np.ndarray
    lag_rad: float
    u_bar: np.ndarray
    k_d: float
    coeffs: GyroCoeffs


def phase_portrait(coeffs: GyroCoeffs, k_d, u_bar, ic_grid,
                   duration=None, samples=400):
    """Damped despun-frame response w' = A_sk_bar w - k_d w + u_bar.

    The system is linear and normal, so trajectories are evaluated from the
    closed-form flow: spirals about the steady state
    omega_ss = (k_d I - A_sk_bar)^{-1} u_bar with decay rate k_d and angular
    rate k_despun.  lag_rad is the angle between omega_ss and the applied
    torque, atan(k_despun / k_d); it approaches 90 degrees at high spin.

    Raises SingularSystemError when k_d == 0 with nonzero torque.
    """
    if k_d < 0.0:
        raise ValueError("damping must be nonnegative")
    u_bar = np.asarray(u_bar, dtype=float)
    kb = coeffs.k_despun
    if k_d == 0.0 and np.linalg.norm(u_bar) > 0.0:
        raise SingularSystemError("undamped system with constant torque has no steady state")

    if np.linalg.norm(u_bar) > 0.0:
        omega_ss = np.linalg.solve(np.array([[k_d, kb], [-kb, k_d]]), u_bar)
        lag = geodesic_angle(lift_xy(u_bar) / np.linalg.norm(u_bar),
                             lift_xy(omega_ss) / np.linalg.norm(omega_ss))
    else:
        omega_ss = np.zeros(2)
        lag = math.nan

    if duration is None:
        duration = 5.0 / k_d if k_d > 0.0 else 4.0 * math.pi / max(abs(kb), 1.0)
    times = np.linspace(0.0, duration, samples)
    ics = np.atleast_2d(np.asarray(ic_grid, dtype=float))

    decay = np.exp(-k_d * times)
    cos_t = np.cos(kb * times)
    sin_t = np.sin(kb * times)
    trajectories = np.empty((ics.shape[0], times.size, 2))
    for i, w0 in enumerate(ics):
        d = w0 - omega_ss
        trajectories[i, :, 0] = omega_ss[0] + decay * (cos_t * d[0] - sin_t * d[1])
        trajectories[i, :, 1] = omega_ss[1] + decay * (sin_t * d[0] + cos_t * d[1])
    return PhasePortrait(times=times, ics=ics, trajectories=trajectories,
                         omega_ss=omega_ss, lag_rad=lag, u_bar=u_bar,
                         k_d=k_d, coeffs=coeffs)


NEVER_SETTLED = math.inf


@dataclass(frozen=True)
class TrajMetrics:
    """Quality summary of a spin-axis path on the sphere.

    settle_time_s is the first sample time after which the pointing error
    stays below the threshold (NEVER_SETTLED when that never happens);
    efficiency compares the geodesic distance between initial and desired
    directions to the arc length actually traced, 1 meaning a geodesic path.
    """

    final_error_deg: float
    settle_time_s: float
    path_length_rad: float
    geodesic_rad: float
    efficiency: float


def traj_metrics(times, gamma_series, gamma_d, settle_threshold_deg=1.0):
    """Compute TrajMetrics for a uniformly sampled spin-axis trajectory."""
    gamma_series = np.asarray(gamma_series, dtype=float)
    times = np.asarray(times, dtype=float)
    if gamma_series.ndim != 2 or gamma_series.shape[0] == 0:
        raise ValueError("gamma series must be a nonempty (n, 3) array")
    gamma_d = np.asarray(gamma_d, dtype=float)

    errors_deg = np.degrees([geodesic_angle(g, gamma_d) for g in gamma_series])
    final_error = float(errors_deg[-1])

    below = errors_deg < settle_threshold_deg
    settle = NEVER_SETTLED
    if below[-1]:
        # walk back over the trailing run of settled samples
        idx = len(below) - 1
        while idx > 0 and below[idx - 1]:
            idx -= 1
        settle = float(times[idx])

    path_length = float(sum(
        geodesic_angle(gamma_series[i], gamma_series[i + 1])
        for i in range(gamma_series.shape[0] - 1)))
    geodesic = geodesic_angle(gamma_series[0], gamma_d)
    if path_length <= geodesic:
        # degenerate or under-resolved path; a geodesic cannot be beaten
        efficiency = 1.0
    else:
        efficiency = geodesic / path_length
    return TrajMetrics(final_error_deg=final_error, settle_time_s=settle,
                       path_length_rad=path_length, geodesic_rad=geodesic,
                       efficiency=efficiency)


__all__ = [
    "error_psi", "lyapunov_value", "LinMatrix", "linearize", "hurwitz",
    "coupling_matrix", "finite_diff_jacobian", "PhasePortrait",
    "phase_portrait", "TrajMetrics", "traj_metrics", "NEVER_SETTLED",
    "HURWITZ_TOL",
]
