"""Scalar coefficient functions for the se(3) exponential and its tangent map.

Every analytic function of ``ad_xi`` collapses onto the basis
``I, ad, ad^2, ad^3, ad^4`` because ``ad`` annihilates
``x (x^2 + theta^2)^2`` with ``theta = |gamma|``.  The scalar weights below
are written as functions of ``phi = theta * s``.  Closed forms cancel badly as
``phi -> 0``, so below ``PHI_SERIES`` the even Taylor polynomial is used; it is
truncated far past double precision on ``[0, 1)``.
"""

from fractions import Fraction
from math import factorial

import numpy as np
from numba import njit

PHI_SERIES = 1.0
_ORDER = 15  # number of even powers kept


def _taylor(terms, denom_power):
    """Even Taylor coefficients of ``sum(c * phi^m * f(phi)) / phi^denom_power``.

    ``terms`` holds ``(c, m, kind)`` with ``kind`` in ``{"1", "sin", "cos"}``.
    """
    top = 2 * _ORDER + denom_power + 2
    num = [Fraction(0)] * (top + 1)
    for c, m, kind in terms:
        c = Fraction(c)
        if kind == "1":
            num[m] += c
            continue
        for k in range(top):
            p = m + 2 * k + (1 if kind == "sin" else 0)
            if p > top:
                break
            f = factorial(2 * k + 1) if kind == "sin" else factorial(2 * k)
            num[p] += c * (-1) ** k / f
    if any(num[i] != 0 for i in range(denom_power)):
        raise ArithmeticError("series has a pole at phi = 0")
    shifted = num[denom_power:]
    if any(shifted[i] != 0 for i in range(1, len(shifted), 2)):
        raise ArithmeticError("expected an even function")
    return np.array([float(shifted[2 * i]) for i in range(_ORDER)])


# exp(t ad) = I + sum_j t^j a_j(phi) ad^j
_A = np.stack([
    _taylor([(Fraction(3, 2), 0, "sin"), (Fraction(-1, 2), 1, "cos")], 1),
    _taylor([(2, 0, "1"), (-2, 0, "cos"), (Fraction(-1, 2), 1, "sin")], 2),
    _taylor([(Fraction(1, 2), 0, "sin"), (Fraction(-1, 2), 1, "cos")], 3),
    _taylor([(1, 0, "1"), (-1, 0, "cos"), (Fraction(-1, 2), 1, "sin")], 4),
])
# T(s) = s I + sum_j (-1)^j s^(j+1) b_j(phi) ad^j
_B = np.stack([
    _A[1],
    _taylor([(Fraction(1, 2), 1, "cos"), (2, 1, "1"), (Fraction(-5, 2), 0, "sin")], 3),
    _A[3],
    _taylor([(Fraction(1, 2), 1, "cos"), (1, 1, "1"), (Fraction(-3, 2), 0, "sin")], 5),
])
# c_j = b_j'(phi) / phi
_C = np.stack([
    _taylor([(Fraction(-1, 2), 2, "cos"), (Fraction(5, 2), 1, "sin"), (4, 0, "cos"), (-4, 0, "1")], 4),
    _taylor([(Fraction(-1, 2), 2, "sin"), (Fraction(-7, 2), 1, "cos"), (-4, 1, "1"),
             (Fraction(15, 2), 0, "sin")], 5),
    _taylor([(Fraction(-1, 2), 2, "cos"), (Fraction(5, 2), 1, "sin"), (4, 0, "cos"), (-4, 0, "1")], 6),
    _taylor([(Fraction(-1, 2), 2, "sin"), (Fraction(-7, 2), 1, "cos"), (-4, 1, "1"),
             (Fraction(15, 2), 0, "sin")], 7),
])


@njit(cache=True)
def _horner(coef, x2):
    acc = 0.0
    for i in range(coef.shape[0] - 1, -1, -1):
        acc = acc * x2 + coef[i]
    return acc


@njit(cache=True)
def exp_coeffs(phi):
    """Return ``(a1, a2, a3, a4)``."""
    out = np.empty(4)
    if phi < PHI_SERIES:
        x2 = phi * phi
        for j in range(4):
            out[j] = _horner(_A[j], x2)
        return out
    s, c = np.sin(phi), np.cos(phi)
    out[0] = (3.0 * s - phi * c) / (2.0 * phi)
    out[1] = (4.0 - 4.0 * c - phi * s) / (2.0 * phi ** 2)
    out[2] = (s - phi * c) / (2.0 * phi ** 3)
    out[3] = (2.0 - 2.0 * c - phi * s) / (2.0 * phi ** 4)
    return out


@njit(cache=True)
def tangent_coeffs(phi):
    """Return ``(b1, b2, b3, b4)``."""
    out = np.empty(4)
    if phi < PHI_SERIES:
        x2 = phi * phi
        for j in range(4):
            out[j] = _horner(_B[j], x2)
        return out
    s, c = np.sin(phi), np.cos(phi)
    out[0] = (4.0 - 4.0 * c - phi * s) / (2.0 * phi ** 2)
    out[1] = (phi * c + 4.0 * phi - 5.0 * s) / (2.0 * phi ** 3)
    out[2] = (2.0 - 2.0 * c - phi * s) / (2.0 * phi ** 4)
    out[3] = (phi * c + 2.0 * phi - 3.0 * s) / (2.0 * phi ** 5)
    return out


@njit(cache=True)
def tangent_dcoeffs(phi):
    """Return ``b_j'(phi) / phi`` for j = 1..4."""
    out = np.empty(4)
    if phi < PHI_SERIES:
        x2 = phi * phi
        for j in range(4):
            out[j] = _horner(_C[j], x2)
        return out
    s, c = np.sin(phi), np.cos(phi)
    p2 = phi * phi
    odd = -p2 * c + 5.0 * phi * s + 8.0 * c - 8.0
    even = -p2 * s - 7.0 * phi * c - 8.0 * phi + 15.0 * s
    out[0] = odd / (2.0 * phi ** 4)
    out[1] = even / (2.0 * phi ** 5)
    out[2] = odd / (2.0 * phi ** 6)
    out[3] = even / (2.0 * phi ** 7)
    return out
