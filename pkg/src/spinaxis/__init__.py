"""Structure-preserving spin-axis control of axisymmetric rigid bodies.

Library layout:

- :mod:`spinaxis.geom`        SO(3) / unit-sphere primitives
- :mod:`spinaxis.dynamics`    rigid-body and actuator models, integrators
- :mod:`spinaxis.controllers` reduced-attitude feedback laws and observer
- :mod:`spinaxis.analysis`    linearization, Lyapunov and path metrics
- :mod:`spinaxis.harness`     scenario configuration and batch simulation
- :mod:`spinaxis.cli`         command-line entry point
"""

__version__ = "0.1.0"

from .analysis import (LinMatrix, PhasePortrait, TrajMetrics, error_psi,
                       finite_diff_jacobian, hurwitz, linearize,
                       lyapunov_value, phase_portrait, traj_metrics)
from .controllers import (ControlLaw, CtlMatrices, Gains, RefAttitude,
                          control_conventional, control_sp, control_sp_motor,
                          control_sp_observer, ctl_matrices, gain_check,
                          observer_update, omega_d, omega_d_dot, omega_d_ddot)
from .dynamics import (BodyParams, CtlState, GyroCoeffs, RigidState,
                       body_rates_deriv, despun_rates_deriv, euler_deriv,
                       motor_deriv, motor_step, step)
from .geom import (exp_so3, geodesic_angle, hat, lift_xy, orthonormalize,
                   project_xy, vee)
from .harness import (Scenario, TrajectoryLog, compare, default_scenario,
                      emit, load_scenario, run)

__all__ = [
    "__version__",
    # geometry
    "hat", "vee", "exp_so3", "geodesic_angle", "project_xy", "lift_xy",
    "orthonormalize",
    # dynamics
    "BodyParams", "GyroCoeffs", "RigidState", "CtlState", "body_rates_deriv",
    "despun_rates_deriv", "euler_deriv", "motor_deriv", "motor_step", "step",
    # controllers
    "ControlLaw", "Gains", "CtlMatrices", "RefAttitude", "ctl_matrices",
    "omega_d", "omega_d_dot", "omega_d_ddot", "control_conventional",
    "control_sp", "control_sp_motor", "control_sp_observer",
    "observer_update", "gain_check",
    # analysis
    "error_psi", "lyapunov_value", "LinMatrix", "linearize", "hurwitz",
    "finite_diff_jacobian", "PhasePortrait", "phase_portrait", "TrajMetrics",
    "traj_metrics",
    # harness
    "Scenario", "TrajectoryLog", "default_scenario", "load_scenario", "run",
    "compare", "emit",
]
