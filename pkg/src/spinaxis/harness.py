"""Scenario configuration, closed-loop simulation driver and output emission.

A scenario couples the full rigid-body simulation (never the planar
reduction, so the steady-spin assumption is exercised rather than assumed)
with one of the feedback laws, optionally through the first-order actuator
model.  Control runs zero-order-hold at its own period, dynamics substep at
the integrator step, and everything is deterministic for a given scenario.

Scenario documents are TOML.  A minimal document only names the law::

    law = "sp"

and inherits every default (bench body parameters, gains k_p = k_d = 5,
1 kHz dynamics / 250 Hz control, horizontal initial spin axis, vertical
desired axis).  Full schema::

    law = "sp"                    # conventional | sp | sp_motor | sp_motor_observer
    duration_s = 5.0
    step_s = 0.001                # must divide control_period_s
    control_period_s = 0.004
    motor_dynamics = false        # realize torques through the actuator lag
    planar_feedforward = true     # false: keep the spin rate in the lead term
    integrator = "lgvi"           # lgvi | rk4
    strict = true                 # reject (rather than warn on) soft issues
    settle_threshold_deg = 1.0

    [body]
    j_sym = 0.0155                # kg m^2
    j_zz = 0.0276                 # kg m^2
    spin_rate_rad_s = 26.18       # or spin_rate_deg_s
    tau_m = 0.0846                # s

    [gains]
    k_p = 5.0
    k_d = 5.0

    [initial]
    gamma = [1.0, 0.0, 0.0]       # initial spin axis (unit vector)
    spin_phase_deg = 0.0          # spin angle about it
    omega_xy = [0.0, 0.0]         # initial planar body rates [rad/s]

    [desired]
    gamma = [0.0, 0.0, 1.0]

    [[disturbance]]               # optional piecewise-constant torque pulses
    t0 = 2.0                      # added to the realized specific torque
    t1 = 2.5
    u = [3.0, 0.0]                # rad/s^2
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .analysis import TrajMetrics, error_psi, lyapunov_value, traj_metrics
from .controllers import (ControlLaw, CtlMatrices, Gains, RefAttitude,
                          control_conventional, control_sp, control_sp_motor,
                          control_sp_observer, ctl_matrices, gain_check,
                          observer_update, omega_d, omega_d_dot)
from .dynamics import (BodyParams, CtlState, RigidState, motor_step, step)
from .errors import (MismatchedScenariosError, ParseError, ValidationError)
from .geom import (E1, E3, align_e3, exp_so3, is_rotation, lift_xy,
                   project_xy)

CSV_HEADER = "t,gx,gy,gz,wx,wy,ux,uy,uhx,uhy,vx,vy,psi,V"


@dataclass(frozen=True)
class Disturbance:
    """Piecewise-constant specific-torque pulse on [t0, t1)."""

    t0: float
    t1: float
    u: np.ndarray

    def value_at(self, t):
        if self.t0 <= t < self.t1:
            return self.u
        return np.zeros(2)


@dataclass(frozen=True)
class Scenario:
    """Fully resolved simulation configuration."""

    law: ControlLaw
    body: BodyParams = field(default_factory=BodyParams)
    gains: Gains = field(default_factory=Gains)
    motor_dynamics: bool = False
    r2_init: np.ndarray = None
    gamma_d: np.ndarray = None
    r_d: np.ndarray = None
    omega_xy_init: np.ndarray = None
    duration_s: float = 5.0
    step_s: float = 1e-3
    control_period_s: float = 4e-3
    disturbances: tuple = ()
    settle_threshold_deg: float = 1.0
    planar_feedforward: bool = True
    integrator: str = "lgvi"
    strict: bool = True

    def __post_init__(self):
        if self.r2_init is None:
            object.__setattr__(self, "r2_init", align_e3(E1))
        if self.gamma_d is None:
            gd = np.array(E3) if self.r_d is None else np.array(self.r_d[:, 2])
            object.__setattr__(self, "gamma_d", gd)
        if self.r_d is None:
            object.__setattr__(self, "r_d", align_e3(self.gamma_d))
        if self.omega_xy_init is None:
            object.__setattr__(self, "omega_xy_init", np.zeros(2))
        _validate_scenario(self)

    @property
    def ref(self):
        return RefAttitude.from_rotation(self.r_d)

    @property
    def gamma_init(self):
        return np.array(self.r2_init[:, 2])


def _validate_scenario(sc: Scenario):
    if not sc.duration_s > 0.0:
        raise ValidationError("duration_s must be positive")
    if not 0.0 < sc.step_s <= 1e-2:
        raise ValidationError("step_s must lie in (0, 0.01] seconds")
    if not sc.control_period_s > 0.0:
        raise ValidationError("control_period_s must be positive")
    ratio = sc.control_period_s / sc.step_s
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ValidationError(
            f"step_s must divide control_period_s (step_s={sc.step_s}, "
            f"control_period_s={sc.control_period_s})")
    if sc.integrator not in ("lgvi", "rk4"):
        raise ValidationError(f"integrator must be 'lgvi' or 'rk4', got {sc.integrator!r}")
    if not is_rotation(sc.r2_init, tol=1e-9):
        raise ValidationError("initial attitude is not a rotation matrix")
    if abs(np.linalg.norm(sc.gamma_d) - 1.0) > 1e-9:
        raise ValidationError("desired direction gamma_d must be a unit vector")
    if not is_rotation(sc.r_d, tol=1e-9):
        raise ValidationError("desired attitude r_d is not a rotation matrix")
    if np.linalg.norm(sc.r_d[:, 2] - sc.gamma_d) > 1e-9:
        raise ValidationError("r_d third column must equal gamma_d")
    for d in sc.disturbances:
        if not (math.isfinite(d.t0) and math.isfinite(d.t1) and d.t0 < d.t1):
            raise ValidationError("disturbance interval must satisfy t0 < t1")
        if not np.all(np.isfinite(d.u)):
            raise ValidationError("disturbance torque must be finite")


def default_scenario(law, **overrides):
    """Scenario with every repo default, overriding selected fields."""
    return Scenario(law=ControlLaw(law), **overrides)


# ---------------------------------------------------------------------------
# configuration loading
# ---------------------------------------------------------------------------

_TOP_KEYS = {"law", "duration_s", "step_s", "control_period_s",
             "motor_dynamics", "planar_feedforward", "integrator", "strict",
             "settle_threshold_deg", "body", "gains", "initial", "desired",
             "disturbance"}


def load_scenario(source, strict=None):
    """Parse a scenario from a TOML document (path or literal text).

    Raises ParseError for malformed documents and ValidationError when a
    value violates a scenario invariant.  With strict false, a non-unit
    desired or initial direction is normalized with a warning instead of
    rejected.
    """
    text, origin = _read_source(source)
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{origin}: {exc}") from exc
    return _scenario_from_dict(doc, origin, strict)


def _read_source(source):
    if isinstance(source, Path):
        return source.read_text(), str(source)
    if isinstance(source, str) and "\n" not in source and "=" not in source:
        path = Path(source)
        if not path.exists():
            raise ParseError(f"{source}: no such scenario file")
        return path.read_text(), source
    if isinstance(source, str):
        return source, "<config>"
    raise ParseError(f"unsupported scenario source {type(source)!r}")


def _unit_or_normalize(vec, name, strict, origin):
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (3,) or not np.all(np.isfinite(vec)):
        raise ValidationError(f"{origin}: {name} must be a finite 3-vector")
    n = np.linalg.norm(vec)
    if n == 0.0:
        raise ValidationError(f"{origin}: {name} must be nonzero")
    if abs(n - 1.0) > 1e-9:
        if strict:
            raise ValidationError(
                f"{origin}: {name} must be a unit vector (norm {n:.6g}); "
                "set strict = false to normalize")
        warnings.warn(f"{origin}: normalizing {name} (norm {n:.6g})")
        vec = vec / n
    return vec


def _scenario_from_dict(doc, origin, strict_override):
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ParseError(f"{origin}: unknown top-level keys {sorted(unknown)}")
    if "law" not in doc:
        raise ParseError(f"{origin}: scenario must name a law")
    try:
        law = ControlLaw(doc["law"])
    except ValueError as exc:
        raise ValidationError(
            f"{origin}: unknown law {doc['law']!r}; expected one of "
            f"{[m.value for m in ControlLaw]}") from exc

    strict = doc.get("strict", True)
    if strict_override is not None:
        strict = strict_override

    body_doc = dict(doc.get("body", {}))
    if "spin_rate_deg_s" in body_doc and "spin_rate_rad_s" in body_doc:
        raise ValidationError(f"{origin}: give spin rate in degrees or radians, not both")
    if "spin_rate_deg_s" in body_doc:
        body_doc["spin_rate_rad_s"] = math.radians(body_doc.pop("spin_rate_deg_s"))
    try:
        body = BodyParams(
            j_sym=float(body_doc.get("j_sym", BodyParams.j_sym)),
            j_zz=float(body_doc.get("j_zz", BodyParams.j_zz)),
            spin_rate=float(body_doc.get("spin_rate_rad_s", BodyParams.spin_rate)),
            tau_m=float(body_doc.get("tau_m", BodyParams.tau_m)),
        )
    except ValueError as exc:
        raise ValidationError(f"{origin}: {exc}") from exc

    gains_doc = doc.get("gains", {})
    try:
        gains = Gains(k_p=float(gains_doc.get("k_p", Gains.k_p)),
                      k_d=float(gains_doc.get("k_d", Gains.k_d)))
    except ValueError as exc:
        raise ValidationError(f"{origin}: {exc}") from exc

    initial = doc.get("initial", {})
    if "rotation" in initial:
        r2_init = np.asarray(initial["rotation"], dtype=float)
        if not is_rotation(r2_init, tol=1e-9):
            raise ValidationError(f"{origin}: initial.rotation is not a rotation matrix")
    else:
        gamma0 = _unit_or_normalize(initial.get("gamma", E1), "initial.gamma",
                                    strict, origin)
        phase = math.radians(float(initial.get("spin_phase_deg", 0.0)))
        r2_init = align_e3(gamma0) @ exp_so3(phase * E3)
    omega_xy = np.asarray(initial.get("omega_xy", [0.0, 0.0]), dtype=float)
    if omega_xy.shape != (2,) or not np.all(np.isfinite(omega_xy)):
        raise ValidationError(f"{origin}: initial.omega_xy must be a finite 2-vector")

    desired = doc.get("desired", {})
    r_d = None
    if "rotation" in desired:
        r_d = np.asarray(desired["rotation"], dtype=float)
        if not is_rotation(r_d, tol=1e-9):
            raise ValidationError(f"{origin}: desired.rotation is not a rotation matrix")
        gamma_d = np.array(r_d[:, 2])
    else:
        gamma_d = _unit_or_normalize(desired.get("gamma", E3), "desired.gamma",
                                     strict, origin)

    disturbances = []
    for i, entry in enumerate(doc.get("disturbance", [])):
        try:
            u = np.asarray(entry["u"], dtype=float)
            dist = Disturbance(t0=float(entry["t0"]), t1=float(entry["t1"]), u=u)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{origin}: disturbance[{i}] needs t0, t1 and u") from exc
        if u.shape != (2,):
            raise ValidationError(f"{origin}: disturbance[{i}].u must be a 2-vector")
        disturbances.append(dist)

    for key in ("motor_dynamics", "planar_feedforward", "strict"):
        if key in doc and not isinstance(doc[key], bool):
            raise ParseError(f"{origin}: field {key} must be a boolean")
    try:
        return Scenario(
            law=law,
            body=body,
            gains=gains,
            motor_dynamics=doc.get("motor_dynamics", False),
            r2_init=r2_init,
            gamma_d=gamma_d,
            r_d=r_d,
            omega_xy_init=omega_xy,
            duration_s=float(doc.get("duration_s", 5.0)),
            step_s=float(doc.get("step_s", 1e-3)),
            control_period_s=float(doc.get("control_period_s", 4e-3)),
            disturbances=tuple(disturbances),
            settle_threshold_deg=float(doc.get("settle_threshold_deg", 1.0)),
            planar_feedforward=bool(doc.get("planar_feedforward", True)),
            integrator=str(doc.get("integrator", "lgvi")),
            strict=bool(strict),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{origin}: {exc}") from exc
    except ValidationError as exc:
        raise ValidationError(f"{origin}: {exc}") from exc


# ---------------------------------------------------------------------------
# closed-loop simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryLog:
    """Per-control-period samples of a closed-loop run plus terminal metrics.

    Row k holds the state at t = k * control_period_s; the command column v
    is the command the law issues at that state.  For runs without motor
    dynamics the realized torque u equals the command, and u_hat mirrors u.
    """

    scenario: Scenario
    t: np.ndarray
    gamma: np.ndarray
    omega: np.ndarray
    u: np.ndarray
    u_hat: np.ndarray
    v: np.ndarray
    psi: np.ndarray
    lyapunov: np.ndarray
    metrics: TrajMetrics
    # diagnostics beyond the emitted columns: full attitude samples and the
    # spin-axis rate component, for residual and invariance checks
    r2: np.ndarray = None
    omega_z: np.ndarray = None


def _command(sc: Scenario, ctl: CtlState, state: RigidState, ref, mats):
    """Command the law issues at the given state (specific torque)."""
    if sc.law is ControlLaw.CONVENTIONAL:
        od = omega_d(state.r2, ref, sc.gains.k_p)
        return control_conventional(ctl.omega, od, sc.gains)
    if sc.law is ControlLaw.SP:
        od = omega_d(state.r2, ref, sc.gains.k_p)
        odd = omega_d_dot(state.r2, state.omega2, ref, sc.gains.k_p)
        return control_sp(ctl.omega, od, odd, sc.gains, mats)
    if sc.law is ControlLaw.SP_MOTOR:
        return control_sp_motor(ctl, state.r2, state.omega2, ref, sc.gains,
                                mats, sc.planar_feedforward)
    return control_sp_observer(ctl, state.r2, state.omega2, ref, sc.gains,
                               mats, sc.planar_feedforward)


def _lyapunov_sample(sc: Scenario, state: RigidState, omega_xy, u, ref, mats):
    od = omega_d(state.r2, ref, sc.gains.k_p)
    u_e = None
    if sc.law in (ControlLaw.SP_MOTOR, ControlLaw.SP_MOTOR_OBSERVER):
        odd = omega_d_dot(state.r2, state.omega2, ref, sc.gains.k_p)
        u_d = control_sp(omega_xy, od, odd, sc.gains, mats)
        u_e = u - u_d
    return lyapunov_value(sc.law, sc.gains, state.gamma, ref.gamma_d,
                          omega_xy, omega_d_val=od, u_e=u_e)


def run(scenario: Scenario):
    """Simulate the closed loop and return its TrajectoryLog.

    Control is computed zero-order-hold every control_period_s from the
    current state; dynamics advance at step_s with the torque held constant
    over each substep.  With motor_dynamics the command drives the actuator
    ODE (integrated exactly per substep) and the body sees the realized
    torque; the observer state advances once per control period.
    """
    check = gain_check(scenario.law, scenario.gains, scenario.body.tau_m)
    if not check.ok:
        message = (f"gains violate the {scenario.law.value} stability condition "
                   f"(margin {check.margin:.6g})")
        if scenario.strict:
            raise ValidationError(message)
        warnings.warn(message)

    body = scenario.body
    coeffs = body.coeffs()
    mats = ctl_matrices(scenario.gains, coeffs.k_body, body.tau_m)
    ref = scenario.ref

    n_sub = round(scenario.control_period_s / scenario.step_s)
    n_periods = round(scenario.duration_s / scenario.control_period_s)
    if abs(n_periods * scenario.control_period_s - scenario.duration_s) > 1e-9:
        n_periods = math.ceil(scenario.duration_s / scenario.control_period_s)

    state = RigidState(
        r2=np.array(scenario.r2_init, dtype=float),
        omega2=lift_xy(scenario.omega_xy_init) + body.spin_rate * E3,
    )
    u = np.zeros(2)
    u_hat = np.zeros(2)

    n_rows = n_periods + 1
    log_t = np.empty(n_rows)
    log_gamma = np.empty((n_rows, 3))
    log_omega = np.empty((n_rows, 2))
    log_u = np.empty((n_rows, 2))
    log_uhat = np.empty((n_rows, 2))
    log_v = np.empty((n_rows, 2))
    log_psi = np.empty(n_rows)
    log_lyap = np.empty(n_rows)
    log_r2 = np.empty((n_rows, 3, 3))
    log_wz = np.empty(n_rows)

    def record(row, t, v_cmd):
        omega_xy = project_xy(state.omega2)
        log_t[row] = t
        log_gamma[row] = state.gamma
        log_omega[row] = omega_xy
        log_u[row] = u
        log_uhat[row] = u_hat
        log_v[row] = v_cmd
        log_psi[row] = error_psi(state.gamma, ref.gamma_d)
        log_lyap[row] = _lyapunov_sample(scenario, state, omega_xy, u, ref, mats)
        log_r2[row] = state.r2
        log_wz[row] = state.omega2[2]

    h = scenario.step_s
    cp = scenario.control_period_s
    for k in range(n_periods + 1):
        t = k * cp
        ctl = CtlState(omega=project_xy(state.omega2), u=u, u_hat=u_hat)
        v = _command(scenario, ctl, state, ref, mats)
        if not scenario.motor_dynamics:
            # the actuator is ideal: the realized torque is the command
            u = np.array(v)
            u_hat = np.array(v)
        record(k, t, v)
        if k == n_periods:
            break

        for i in range(n_sub):
            t_sub = t + i * h
            u_eff = u + _disturbance_at(scenario, t_sub)
            torque = body.j_sym * lift_xy(u_eff)
            state = step(state, torque, h, body, method=scenario.integrator)
            if scenario.motor_dynamics:
                u = motor_step(u, v, body.tau_m, h)
        if scenario.motor_dynamics:
            u_hat = observer_update(u_hat, v, body.tau_m, cp)

    metrics = traj_metrics(log_t, log_gamma, ref.gamma_d,
                           scenario.settle_threshold_deg)
    return TrajectoryLog(scenario=scenario, t=log_t, gamma=log_gamma,
                         omega=log_omega, u=log_u, u_hat=log_uhat, v=log_v,
                         psi=log_psi, lyapunov=log_lyap, metrics=metrics,
                         r2=log_r2, omega_z=log_wz)


def _disturbance_at(scenario: Scenario, t):
    total = np.zeros(2)
    for d in scenario.disturbances:
        total = total + d.value_at(t)
    return total


# ---------------------------------------------------------------------------
# comparison and emission
# ---------------------------------------------------------------------------

LYAPUNOV_RISE_TOL = 1e-8


@dataclass(frozen=True)
class ComparisonReport:
    """Per-scenario metrics plus Lyapunov monotonicity verdicts."""

    rows: tuple

    def to_dict(self):
        return {"scenarios": [dict(r) for r in self.rows]}

    def to_text(self):
        cols = ("law", "motor", "final_error_deg", "settle_time_s",
                "path_length_rad", "efficiency", "lyapunov_monotone")
        widths = {c: max(len(c), *(len(_fmt(r[c])) for r in self.rows)) for c in cols}
        lines = ["  ".join(c.ljust(widths[c]) for c in cols)]
        for r in self.rows:
            lines.append("  ".join(_fmt(r[c]).ljust(widths[c]) for c in cols))
        return "\n".join(lines)


def _fmt(value):
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def compare(scenarios):
    """Run several scenarios sharing initial and desired attitudes.

    Raises MismatchedScenariosError when fewer than two scenarios are given
    or their initial/desired spin-axis directions differ.
    """
    scenarios = list(scenarios)
    if len(scenarios) < 2:
        raise MismatchedScenariosError("compare needs at least two scenarios")
    g0 = scenarios[0].gamma_init
    gd = scenarios[0].gamma_d
    for sc in scenarios[1:]:
        if (np.linalg.norm(sc.gamma_init - g0) > 1e-12
                or np.linalg.norm(sc.gamma_d - gd) > 1e-12):
            raise MismatchedScenariosError(
                "scenarios must share initial and desired spin-axis directions")

    rows = []
    for sc in scenarios:
        log = run(sc)
        rises = np.diff(log.lyapunov)
        rows.append({
            "law": sc.law.value,
            "motor": sc.motor_dynamics,
            "final_error_deg": log.metrics.final_error_deg,
            "settle_time_s": log.metrics.settle_time_s,
            "path_length_rad": log.metrics.path_length_rad,
            "geodesic_rad": log.metrics.geodesic_rad,
            "efficiency": log.metrics.efficiency,
            "lyapunov_monotone": bool(np.all(rises <= LYAPUNOV_RISE_TOL)),
        })
    return ComparisonReport(rows=tuple(rows))


def emit(log: TrajectoryLog, fmt, path):
    """Write a TrajectoryLog in one of the supported formats.

    csv:         one row per sample with the fixed header
    sphere_path: (t, gx, gy, gz) rows plus start/desired/final marker footer
    summary:     terminal metrics as key=value lines
    """
    if log.t.size == 0:
        raise ValidationError("refusing to emit an empty trajectory log")
    path = Path(path)
    try:
        if fmt == "csv":
            _emit_csv(log, path)
        elif fmt == "sphere_path":
            _emit_sphere_path(log, path)
        elif fmt == "summary":
            path.write_text(summary_text(log))
        else:
            raise ValueError(f"unknown emit format {fmt!r}")
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc
    return path


def _emit_csv(log, path):
    lines = [CSV_HEADER]
    for i in range(log.t.size):
        row = [log.t[i], *log.gamma[i], *log.omega[i], *log.u[i],
               *log.u_hat[i], *log.v[i], log.psi[i], log.lyapunov[i]]
        lines.append(",".join(repr(float(x)) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _emit_sphere_path(log, path):
    lines = ["t,gx,gy,gz"]
    for i in range(log.t.size):
        lines.append(",".join(repr(float(x)) for x in (log.t[i], *log.gamma[i])))
    for name, vec in (("start", log.gamma[0]),
                      ("desired", log.scenario.gamma_d),
                      ("final", log.gamma[-1])):
        lines.append("# " + name + "," + ",".join(repr(float(x)) for x in vec))
    path.write_text("\n".join(lines) + "\n")


def summary_text(log: TrajectoryLog):
    m = log.metrics
    pairs = (
        ("law", log.scenario.law.value),
        ("motor_dynamics", str(log.scenario.motor_dynamics).lower()),
        ("duration_s", repr(float(log.t[-1]))),
        ("final_error_deg", repr(float(m.final_error_deg))),
        ("settle_time_s", repr(float(m.settle_time_s))),
        ("path_length_rad", repr(float(m.path_length_rad))),
        ("geodesic_rad", repr(float(m.geodesic_rad))),
        ("efficiency", repr(float(m.efficiency))),
    )
    return "\n".join(f"{k}={v}" for k, v in pairs) + "\n"


__all__ = [
    "Scenario", "Disturbance", "TrajectoryLog", "ComparisonReport",
    "default_scenario", "load_scenario", "run", "compare", "emit",
    "summary_text", "CSV_HEADER", "LYAPUNOV_RISE_TOL",
]
