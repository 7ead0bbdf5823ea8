"""Rotation-matrix and unit-sphere primitives.

Conventions used everywhere in this package:

- rotation matrices map body coordinates to inertial coordinates and act on
  column vectors,
- the hat map follows the right-hand rule, ``hat(v) @ w == np.cross(v, w)``,
- all angles are radians; degrees appear only at CLI/config boundaries.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NotSkewError

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

ROTATION_TOL = 1e-10   # |R^T R - I|_F and |det R - 1| allowed on a Rotation
UNIT_TOL = 1e-12       # | |v| - 1 | allowed on a unit vector
SKEW_TOL = 1e-9        # |S + S^T|_F allowed by vee()

_SMALL_ANGLE = 1e-6    # below this, Rodrigues coefficients use series


def hat(v):
    """Skew-symmetric matrix of v, satisfying hat(v) @ w = v x w."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(S):
    """Inverse of hat(). Raises NotSkewError when S is not skew-symmetric."""
    S = np.asarray(S, dtype=float)
    if np.linalg.norm(S + S.T) > SKEW_TOL:
        raise NotSkewError(f"matrix is not skew-symmetric: |S + S^T| = {np.linalg.norm(S + S.T):.3e}")
    return np.array([
        0.5 * (S[2, 1] - S[1, 2]),
        0.5 * (S[0, 2] - S[2, 0]),
        0.5 * (S[1, 0] - S[0, 1]),
    ])


def exp_so3(v):
    """Rotation by angle |v| about axis v/|v| (Rodrigues formula).

    For |v| < 1e-6 the sin(t)/t and (1-cos t)/t^2 coefficients are replaced
    by their second-order series to avoid 0/0 without losing precision.
    """
    v = np.asarray(v, dtype=float)
    theta2 = float(v @ v)
    theta = math.sqrt(theta2)
    if theta < _SMALL_ANGLE:
        a = 1.0 - theta2 / 6.0
        b = 0.5 - theta2 / 24.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta2
    K = hat(v)
    return np.eye(3) + a * K + b * (K @ K)


def geodesic_angle(a, b):
    """Great-circle angle between two unit vectors, in [0, pi]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return math.atan2(np.linalg.norm(np.cross(a, b)), float(a @ b))


def project_xy(v):
    """Pick the xy components of a 3-vector."""
    return np.array([v[0], v[1]])


def lift_xy(v):
    """Embed a planar vector into R^3 with zero z component."""
    return np.array([v[0], v[1], 0.0])


def orthonormalize(R):
    """Project a near-rotation matrix onto SO(3) (orthogonal polar factor)."""
    X = np.asarray(R, dtype=float)
    # Newton iteration for the polar factor; quadratic convergence, so a few
    # passes suffice for matrices already close to orthogonal.
    for _ in range(3):
        X = 0.5 * (X + np.linalg.inv(X).T)
    return X


def is_rotation(R, tol=ROTATION_TOL):
    """True when R satisfies the special-orthogonality invariants within tol."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    return (np.linalg.norm(R.T @ R - np.eye(3)) <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol)


def as_unit(v, tol=UNIT_TOL):
    """Validate that v is a unit 3-vector and return it as a float array."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > tol:
        raise ValueError(f"vector is not unit length: |v| = {n!r}")
    return v


def align_e3(gamma):
    """Some rotation whose third column is the unit vector gamma.

    The result is unique only up to spin about gamma; callers that care about
    the spin phase multiply by exp_so3(phase * e3) on the right.
    """
    gamma = np.asarray(gamma, dtype=float)
    axis = np.cross(E3, gamma)
    s = np.linalg.norm(axis)
    c = float(E3 @ gamma)
    if s < 1e-12:
        if c > 0.0:
            return np.eye(3)
        return exp_so3(math.pi * E1)
    return exp_so3(math.atan2(s, c) * axis / s)
