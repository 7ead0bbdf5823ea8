import math

import numpy as np
import numpy.testing as npt
import pytest

from spinaxis.analysis import (NEVER_SETTLED, error_psi, finite_diff_jacobian,
                               hurwitz, linearize, lyapunov_value,
                               phase_portrait, traj_metrics)
from spinaxis.controllers import ControlLaw, Gains, RefAttitude
from spinaxis.dynamics import BodyParams, GyroCoeffs
from spinaxis.errors import InvalidEquilibriumError, SingularSystemError
from spinaxis.geom import E1, E3, geodesic_angle

BODY = BodyParams()
REF = RefAttitude.from_direction([0, 0, 1])
LAWS = (ControlLaw.SP, ControlLaw.CONVENTIONAL, ControlLaw.SP_MOTOR)


def test_error_psi_reference_values():
    assert error_psi(E3, E3) == 0.0
    assert error_psi(-E3, E3) == 2.0
    assert error_psi(E1, E3) == 1.0


def test_error_psi_equals_one_minus_cos_geodesic():
    rng = np.random.default_rng(0)
    for _ in range(100):
        a, b = rng.normal(size=(2, 3))
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        assert error_psi(a, b) == pytest.approx(1 - math.cos(geodesic_angle(a, b)),
                                                abs=1e-12)


def test_lyapunov_values_at_equilibria():
    g = Gains(k_p=3.0, k_d=1.0)
    assert lyapunov_value("sp", g, E3, E3, np.zeros(2), np.zeros(2)) == 0.0
    assert lyapunov_value("conventional", g, E3, E3, np.zeros(2)) == 0.0
    # antipode at rest: Psi = 2, quadratic terms zero
    assert lyapunov_value("sp", g, -E3, E3, np.zeros(2), np.zeros(2)) \
        == pytest.approx(2 * g.k_p)
    assert lyapunov_value("sp_motor", g, -E3, E3, np.zeros(2), np.zeros(2),
                          u_e=np.zeros(2)) == pytest.approx(2 * g.k_p)


def test_lyapunov_quadratic_terms():
    g = Gains(k_p=1.0, k_d=1.0)
    v = lyapunov_value("sp_motor", g, E1, E3, np.array([1.0, 2.0]),
                       omega_d_val=np.array([1.0, 0.0]), u_e=np.array([0.0, 3.0]))
    assert v == pytest.approx(1.0 * 1.0 + 0.5 * 4.0 + 0.5 * 9.0)


# ---------------------------------------------------------------------------
# linearization
# ---------------------------------------------------------------------------

def test_coupling_block_signs_at_equilibria():
    # P = -k_p I aligned, +k_p I at the antipode; it enters the
    # conventional-law linearization directly as the lower-left block and the
    # motor-law linearization as the upper-left block
    g = Gains(k_p=2.5, k_d=1.0)
    lin2 = linearize("conventional", REF.gamma_d, REF, g, BODY)
    npt.assert_allclose(lin2.matrix[2:, :2], -g.k_p * np.eye(2), atol=1e-12)
    lin2_down = linearize("conventional", -REF.gamma_d, REF, g, BODY)
    npt.assert_allclose(lin2_down.matrix[2:, :2], g.k_p * np.eye(2), atol=1e-12)
    lin3 = linearize("sp_motor", REF.gamma_d, REF, g, BODY)
    npt.assert_allclose(lin3.matrix[:2, :2], -g.k_p * np.eye(2), atol=1e-12)
    npt.assert_allclose(lin3.matrix[4:, 4:], -np.eye(2) / BODY.tau_m, atol=1e-12)


def test_linearize_rejects_non_equilibrium():
    g = Gains(k_p=1.0, k_d=1.0)
    with pytest.raises(InvalidEquilibriumError):
        linearize("sp", E1, REF, g, BODY)


def test_s2_spectrum_zero_coupling_example():
    # k = 0, k_p = k_d = 1: blocks [[0, I], [-I, -I]], eigenvalues from
    # lambda^2 + lambda + 1 (each pair doubled)
    params = BodyParams(j_sym=1.0, j_zz=1.0, spin_rate=1.0, tau_m=0.1)
    assert params.coeffs().k_body == 0.0
    lin = linearize("conventional", REF.gamma_d, REF, Gains(k_p=1.0, k_d=1.0), params)
    npt.assert_allclose(lin.matrix, np.block([
        [np.zeros((2, 2)), np.eye(2)], [-np.eye(2), -np.eye(2)]]), atol=1e-14)
    _, spectrum = hurwitz(lin)
    expected = np.roots([1, 1, 1])
    for ev in spectrum:
        assert min(abs(ev - r) for r in expected) < 1e-9
        assert ev.real == pytest.approx(-0.5, abs=1e-12)


def test_sp_spectrum_structure():
    # closed loop of the structure-preserving law: damped-gyroscope pair
    # -k_d +/- i k plus a double real eigenvalue at -k_p
    g = Gains(k_p=4.0, k_d=2.0)
    k = BODY.coeffs().k_body
    _, spectrum = hurwitz(linearize("sp", REF.gamma_d, REF, g, BODY))
    expected = [-g.k_d + 1j * k, -g.k_d - 1j * k, -g.k_p, -g.k_p]
    for target in expected:
        assert min(abs(ev - target) for ev in spectrum) < 1e-9


def test_hurwitz_simple_matrix():
    is_h, _ = hurwitz(np.diag([-1.0, -2.0]))
    assert is_h
    is_h, _ = hurwitz(np.diag([-1.0, 1e-6]))
    assert not is_h


@pytest.mark.parametrize("law", LAWS)
def test_hurwitz_split_at_both_equilibria(law):
    g = Gains(k_p=3.0, k_d=2.0)
    up, _ = hurwitz(linearize(law, REF.gamma_d, REF, g, BODY))
    down_lin = linearize(law, -REF.gamma_d, REF, g, BODY)
    down, spec_down = hurwitz(down_lin)
    assert up
    assert not down
    assert spec_down.real.max() > 0.0


@pytest.mark.parametrize("law", LAWS)
def test_finite_difference_oracle_matches_linearize(law):
    rng = np.random.default_rng(12)
    tau = BODY.tau_m
    for _ in range(25):
        g = Gains(k_p=float(rng.uniform(0.5, 20)),
                  k_d=float(rng.uniform((1 + tau) / 4 + 0.05, 20)))
        for gamma_eq in (REF.gamma_d, -REF.gamma_d):
            lin = linearize(law, gamma_eq, REF, g, BODY).matrix
            fd = finite_diff_jacobian(law, gamma_eq, REF, g, BODY, eps=1e-6)
            rel = np.linalg.norm(fd - lin) / np.linalg.norm(lin)
            assert rel <= 1e-5


def test_finite_difference_eps_bounds():
    g = Gains(k_p=1.0, k_d=1.0)
    with pytest.raises(ValueError):
        finite_diff_jacobian("sp", REF.gamma_d, REF, g, BODY, eps=1e-9)
    with pytest.raises(ValueError):
        finite_diff_jacobian("sp", REF.gamma_d, REF, g, BODY, eps=1e-3)


def test_zero_gain_zero_coupling_jacobian_is_kinematic_shift():
    # with k = 0 and vanishing gains only the kinematic identity block stays
    params = BodyParams(j_sym=1.0, j_zz=1.0, spin_rate=0.0, tau_m=0.1)
    g = Gains(k_p=1e-12, k_d=1e-12)
    fd = finite_diff_jacobian("sp", REF.gamma_d, REF, g, params, eps=1e-6)
    expected = np.zeros((4, 4))
    expected[0, 2] = expected[1, 3] = 1.0
    npt.assert_allclose(fd, expected, atol=1e-9)


def test_conventional_law_verge_of_instability():
    # with the gyro coupling fixed, the spectral abscissa of the
    # conventional-law linearization approaches zero as damping vanishes
    prev = None
    for k_d in (2.0, 0.5, 0.1, 0.02):
        g = Gains(k_p=5.0, k_d=k_d)
        _, spectrum = hurwitz(linearize("conventional", REF.gamma_d, REF, g, BODY))
        abscissa = spectrum.real.max()
        assert abscissa < 0.0
        if prev is not None:
            assert abscissa > prev  # marching toward the imaginary axis
        prev = abscissa
    assert prev > -5e-3


# ---------------------------------------------------------------------------
# phase portraits
# ---------------------------------------------------------------------------

def test_phase_portrait_lag_and_steady_state():
    coeffs = GyroCoeffs(k_body=math.nan, k_despun=46.61)
    p = phase_portrait(coeffs, 1.0, [1.0, 0.0], [[0.0, 0.0]])
    npt.assert_allclose(p.omega_ss, [4.601e-4, 2.1445e-2], rtol=1e-3)
    assert math.degrees(p.lag_rad) == pytest.approx(88.77, abs=0.01)
    assert p.lag_rad == pytest.approx(math.atan(46.61 / 1.0), abs=1e-12)


def test_phase_portrait_exact_exponential_decay():
    coeffs = GyroCoeffs(k_body=math.nan, k_despun=10.0)
    k_d = 0.8
    p = phase_portrait(coeffs, k_d, [0.5, -0.2], [[2.0, 1.0], [-1.0, 0.4]],
                       duration=4.0, samples=200)
    for i in range(p.ics.shape[0]):
        d0 = np.linalg.norm(p.ics[i] - p.omega_ss)
        dist = np.linalg.norm(p.trajectories[i] - p.omega_ss, axis=1)
        npt.assert_allclose(dist, d0 * np.exp(-k_d * p.times), rtol=1e-10)


def test_phase_portrait_trajectories_satisfy_ode():
    # differentiate the sampled spiral and compare with the damped model
    coeffs = GyroCoeffs(k_body=math.nan, k_despun=5.0)
    k_d = 0.5
    u = np.array([0.3, 0.1])
    p = phase_portrait(coeffs, k_d, u, [[1.0, -1.0]], duration=2.0, samples=4001)
    traj = p.trajectories[0]
    dt = p.times[1] - p.times[0]
    for idx in (100, 1000, 3000):
        fd = (traj[idx + 1] - traj[idx - 1]) / (2 * dt)
        w = traj[idx]
        model = np.array([-coeffs.k_despun * w[1], coeffs.k_despun * w[0]]) \
            - k_d * w + u
        npt.assert_allclose(fd, model, atol=2e-5)


def test_phase_portrait_undamped_spirals():
    coeffs = GyroCoeffs(k_body=math.nan, k_despun=3.0)
    p = phase_portrait(coeffs, 0.0, [0.0, 0.0], [[1.0, 0.0]], duration=10.0)
    radii = np.linalg.norm(p.trajectories[0], axis=1)
    npt.assert_allclose(radii, 1.0, rtol=1e-12)


def test_phase_portrait_all_trajectories_reach_origin():
    coeffs = GyroCoeffs(k_body=math.nan, k_despun=46.61)
    ics = [[x, y] for x in (-1, 0, 1) for y in (-1, 0, 1)]
    p = phase_portrait(coeffs, 2.0, [0.0, 0.0], ics, duration=6.0)
    finals = p.trajectories[:, -1, :]
    assert np.linalg.norm(finals, axis=1).max() <= 1e-5
    npt.assert_allclose(p.omega_ss, [0, 0], atol=1e-15)


def test_phase_portrait_singular_without_damping():
    coeffs = GyroCoeffs(k_body=math.nan, k_despun=3.0)
    with pytest.raises(SingularSystemError):
        phase_portrait(coeffs, 0.0, [1.0, 0.0], [[0.0, 0.0]])


def test_phase_portrait_rejects_negative_damping():
    coeffs = GyroCoeffs(k_body=math.nan, k_despun=3.0)
    with pytest.raises(ValueError):
        phase_portrait(coeffs, -1.0, [0.0, 0.0], [[0.0, 0.0]])


# ---------------------------------------------------------------------------
# trajectory metrics
# ---------------------------------------------------------------------------

def test_metrics_constant_at_target():
    times = np.linspace(0, 1, 11)
    series = np.tile(E3, (11, 1))
    m = traj_metrics(times, series, E3)
    assert m.final_error_deg == 0.0
    assert m.settle_time_s == 0.0
    assert m.efficiency == 1.0
    assert m.path_length_rad == 0.0


def test_metrics_great_circle_sweep():
    # quarter circle from e1 to e3 is a geodesic: efficiency 1 within
    # discretization error
    n = 200
    ts = np.linspace(0, 1, n)
    series = np.stack([np.array([math.cos(a), 0, math.sin(a)])
                       for a in np.linspace(0, math.pi / 2, n)])
    m = traj_metrics(ts, series, E3)
    assert m.geodesic_rad == pytest.approx(math.pi / 2, abs=1e-12)
    assert m.path_length_rad == pytest.approx(math.pi / 2, abs=1e-4)
    assert m.efficiency == pytest.approx(1.0, abs=1e-6)
    assert m.final_error_deg == pytest.approx(0.0, abs=1e-9)


def test_metrics_two_half_turn_detour():
    # e1 -> -e1 along a great circle through e2, then -e1 -> e3 through e2:
    # total path 3 pi / 2 against a geodesic of pi / 2
    n = 400
    first = [np.array([math.cos(a), math.sin(a), 0.0])
             for a in np.linspace(0, math.pi, n, endpoint=False)]
    # then -e1 to e3 through the xz half-plane
    second = [np.array([-math.cos(a), 0.0, math.sin(a)])
              for a in np.linspace(0, math.pi / 2, n)]
    series = np.stack(first + second)
    ts = np.linspace(0, 1, len(series))
    m = traj_metrics(ts, series, E3)
    assert m.path_length_rad == pytest.approx(3 * math.pi / 2, abs=2e-2)
    assert m.efficiency == pytest.approx(1.0 / 3.0, abs=5e-3)


def test_metrics_settle_semantics():
    # error dips under the threshold, pops out, then stays in: settle time is
    # the start of the trailing run
    tilt = math.radians(0.5)
    near = np.array([math.sin(tilt), 0, math.cos(tilt)])
    far = np.array([math.sin(math.radians(5)), 0, math.cos(math.radians(5))])
    series = np.stack([E1, near, far, near, near])
    ts = np.arange(5.0)
    m = traj_metrics(ts, series, E3, settle_threshold_deg=1.0)
    assert m.settle_time_s == 3.0


def test_metrics_never_settled_sentinel():
    series = np.stack([E1, E1, E1])
    m = traj_metrics(np.arange(3.0), series, E3)
    assert m.settle_time_s == NEVER_SETTLED
    assert math.isinf(m.settle_time_s)


def test_metrics_rejects_empty():
    with pytest.raises(ValueError):
        traj_metrics(np.array([]), np.empty((0, 3)), E3)
