"""SE(3) / se(3) numerics.

Screw vectors are plain float arrays of shape ``(6,)`` ordered
``(angular, linear)``: strain ``xi = (gamma, epsilon)``, twist
``eta = (omega, nu)``, wrench ``(moment, force)``.  Every 6x6 operator in the
package uses the same block order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._series import exp_coeffs, tangent_coeffs, tangent_dcoeffs

SMALL_ANGLE = 1e-6


def screw(angular, linear) -> np.ndarray:
    return np.concatenate([np.asarray(angular, float), np.asarray(linear, float)])


def skew(w) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


def _check_finite(a, what):
    if not np.all(np.isfinite(a)):
        raise FloatingPointError(f"non-finite entries in {what}")
    return a


@dataclass(frozen=True, eq=False)
class Pose:
    """Element of SE(3) stored as rotation + position."""

    rotation: np.ndarray
    position: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return (np.array_equal(self.rotation, other.rotation)
                and np.array_equal(self.position, other.position))

    __hash__ = None

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m) -> "Pose":
        m = np.asarray(m, float).reshape(4, 4)
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=1e-12):
            raise ValueError("bottom row of a homogeneous transform must be (0, 0, 0, 1)")
        return cls(m[:3, :3].copy(), m[:3, 3].copy())

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.position
        return m

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.position)

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.position + self.position)

    def validate(self, tol: float = 1e-9) -> "Pose":
        r = self.rotation
        if r.shape != (3, 3) or np.asarray(self.position).shape != (3,):
            raise ValueError("pose must hold a 3x3 rotation and a 3-vector position")
        _check_finite(r, "rotation")
        _check_finite(self.position, "position")
        if np.abs(r.T @ r - np.eye(3)).max() > tol:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > tol:
            raise ValueError("rotation determinant is not +1")
        return self


def hat(x) -> np.ndarray:
    """Map a screw vector to its 4x4 se(3) matrix."""
    x = _check_finite(np.asarray(x, float), "screw vector")
    m = np.zeros((4, 4))
    m[:3, :3] = skew(x[:3])
    m[:3, 3] = x[3:]
    return m


def vee(m, tol: float = 1e-12) -> np.ndarray:
    m = _check_finite(np.asarray(m, float), "se(3) matrix")
    if m.shape != (4, 4):
        raise ValueError("not in se(3): expected a 4x4 matrix")
    w = m[:3, :3]
    scale = max(1.0, np.abs(w).max())
    if np.abs(w + w.T).max() > tol * scale or np.abs(m[3]).max() > tol * scale:
        raise ValueError("not in se(3): rotation block is not antisymmetric")
    return np.array([m[2, 1], m[0, 2], m[1, 0], m[0, 3], m[1, 3], m[2, 3]])


def exp_se3(xi, s: float) -> Pose:
    """``exp(s * hat(xi))`` in closed form (Rodrigues)."""
    if s < 0:
        raise ValueError("arclength must be non-negative")
    xi = _check_finite(np.asarray(xi, float), "strain")
    gamma, eps = xi[:3], xi[3:]
    theta = float(np.linalg.norm(gamma))
    phi = theta * s
    g = skew(gamma)
    g2 = g @ g
    if phi < SMALL_ANGLE:
        # Taylor in s up to the fourth order
        s2, s3, s4 = s * s, s ** 3, s ** 4
        rot = np.eye(3) + s * g + s2 / 2 * g2 + s3 / 6 * g @ g2 + s4 / 24 * g2 @ g2
        v = s * np.eye(3) + s2 / 2 * g + s3 / 6 * g2 + s4 / 24 * g @ g2
    else:
        half = np.sin(phi / 2)
        one_minus_cos = 2.0 * half * half
        rot = np.eye(3) + np.sin(phi) / theta * g + one_minus_cos / theta ** 2 * g2
        v = s * np.eye(3) + one_minus_cos / theta ** 2 * g + (phi - np.sin(phi)) / theta ** 3 * g2
    return Pose(rot, v @ eps)


def adjoint_of(g: Pose, inverse: bool = False) -> np.ndarray:
    """``Ad_g`` (or ``Ad_{g^-1}``) acting on (angular, linear) twists."""
    g.validate()
    r, p = g.rotation, g.position
    out = np.zeros((6, 6))
    if inverse:
        rt = r.T
        out[:3, :3] = rt
        out[3:, 3:] = rt
        out[3:, :3] = -rt @ skew(p)
    else:
        out[:3, :3] = r
        out[3:, 3:] = r
        out[3:, :3] = skew(p) @ r
    return out


def ad_small(xi, co: bool = False) -> np.ndarray:
    """Lie bracket matrix ``ad_xi``; with ``co`` the coadjoint ``-ad_xi^T``.

    The coadjoint sign is the one for which ``ad*_eta M eta`` is the
    gyroscopic wrench ``(w x Iw + v x mv, w x mv)`` of a rigid slice.
    """
    xi = _check_finite(np.asarray(xi, float), "screw vector")
    out = _ad(xi)
    return -out.T if co else out


@njit(cache=True)
def _ad(x):
    out = np.zeros((6, 6))
    for blk in range(2):
        v = x[3 * blk:3 * blk + 3]
        r0 = 3 * blk
        out[r0 + 0, 1] = -v[2]
        out[r0 + 0, 2] = v[1]
        out[r0 + 1, 0] = v[2]
        out[r0 + 1, 2] = -v[0]
        out[r0 + 2, 0] = -v[1]
        out[r0 + 2, 1] = v[0]
    out[3:, 3:] = out[:3, :3]
    return out


@njit(cache=True)
def _ad_powers(ad):
    pw = np.empty((5, 6, 6))
    pw[0] = np.eye(6)
    for j in range(1, 5):
        pw[j] = pw[j - 1] @ ad
    return pw


@njit(cache=True)
def _exp_ad(pw, theta, t):
    """``exp(t * ad)`` = ``Ad_{exp(t xi)}`` from precomputed powers of ``ad``."""
    a = exp_coeffs(abs(t) * theta)
    out = pw[0].copy()
    tj = 1.0
    for j in range(4):
        tj *= t
        out += tj * a[j] * pw[j + 1]
    return out


@njit(cache=True)
def _tangent(pw, theta, s):
    b = tangent_coeffs(theta * s)
    out = s * pw[0]
    sj = s
    sign = 1.0
    for j in range(4):
        sj *= s
        sign = -sign
        out += sign * sj * b[j] * pw[j + 1]
    return out


@njit(cache=True)
def _tangent_dot(pw, dpw, theta, gdot, s):
    """Time derivative of ``T(xi, s)``; ``dpw[j]`` = d(ad^j) along xidot, ``gdot`` = gamma . gammadot."""
    b = tangent_coeffs(theta * s)
    c = tangent_dcoeffs(theta * s)
    out = np.zeros((6, 6))
    sj = s
    sign = 1.0
    for j in range(4):
        sj *= s
        sign = -sign
        out += sign * sj * (s * s * c[j] * gdot * pw[j + 1] + b[j] * dpw[j + 1])
    return out


@njit(cache=True)
def _dpowers(pw, dad):
    """Directional derivatives of ``ad^j`` given ``dad`` = ``ad_{xidot}``."""
    dpw = np.zeros((5, 6, 6))
    for j in range(1, 5):
        dpw[j] = dpw[j - 1] @ pw[1] + pw[j - 1] @ dad
    return dpw


def tangent_exp(xi, s: float) -> np.ndarray:
    """Left tangent operator ``T(xi, s) = int_0^s Ad_{exp(xi t)}^-1 dt``.

    Satisfies ``d/de exp((xi + e d) s)|_0 = exp(xi s) hat(T d)``.
    """
    if s < 0:
        raise ValueError("arclength must be non-negative")
    xi = _check_finite(np.asarray(xi, float), "strain")
    pw = _ad_powers(_ad(xi))
    return _tangent(pw, float(np.linalg.norm(xi[:3])), float(s))


def tangent_exp_dot(xi, xidot, s: float) -> np.ndarray:
    """Derivative of :func:`tangent_exp` along the strain rate ``xidot``."""
    xi = np.asarray(xi, float)
    xidot = np.asarray(xidot, float)
    pw = _ad_powers(_ad(xi))
    dpw = _dpowers(pw, _ad(xidot))
    return _tangent_dot(pw, dpw, float(np.linalg.norm(xi[:3])),
                        float(xi[:3] @ xidot[:3]), float(s))


def exp_adjoint(xi, t: float) -> np.ndarray:
    """``Ad_{exp(t xi)}`` for any real ``t`` (negative ``t`` gives the inverse)."""
    xi = np.asarray(xi, float)
    return _exp_ad(_ad_powers(_ad(xi)), float(np.linalg.norm(xi[:3])), float(t))
