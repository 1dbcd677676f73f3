"""Compiled quadrature kernels for the generalized dynamics.

Both kernels share one kinematic sweep.  For a node at local arclength ``s``
of section ``i`` the body Jacobian factors as

    J(X) = A_s [Q_{k->i} T_k]_{k<i}  (+)  T(xi_i, s) in column block i,

with ``A_s = Ad^-1_{exp(xi_i s)}``, ``P_k = Ad^-1_{exp(xi_k L_k)}`` and
``Q_{k->i} = P_{i-1} ... P_{k+1}``.  Any integral ``sum w J^T W J`` therefore
reduces to per-section sums of 6x6 products plus a backward composite
recursion, so node work stays linear in the number of microsolids.

The 6x6 helpers below write into caller-owned buffers; going through ``@``
costs a BLAS dispatch and an allocation per product, which dominated runtime.
"""

import numpy as np
from numba import njit

from ._series import exp_coeffs, tangent_coeffs, tangent_dcoeffs
from .screw import _ad, _ad_powers, _dpowers


@njit(cache=True, inline="always")
def _mm(a, b, out):
    for r in range(6):
        for c in range(6):
            acc = 0.0
            for k in range(6):
                acc += a[r, k] * b[k, c]
            out[r, c] = acc


@njit(cache=True, inline="always")
def _tmm(a, b, out):
    """``out = a^T b``."""
    for r in range(6):
        for c in range(6):
            acc = 0.0
            for k in range(6):
                acc += a[k, r] * b[k, c]
            out[r, c] = acc


@njit(cache=True, inline="always")
def _acc_mm(w, a, b, out):
    """``out += w * a b``."""
    for r in range(6):
        for c in range(6):
            acc = 0.0
            for k in range(6):
                acc += a[r, k] * b[k, c]
            out[r, c] += w * acc


@njit(cache=True, inline="always")
def _mv(a, x, out):
    for r in range(6):
        acc = 0.0
        for k in range(6):
            acc += a[r, k] * x[k]
        out[r] = acc


@njit(cache=True, inline="always")
def _acc_mv(w, a, x, out):
    for r in range(6):
        acc = 0.0
        for k in range(6):
            acc += a[r, k] * x[k]
        out[r] += w * acc


@njit(cache=True, inline="always")
def _acc_tmv(w, a, x, out):
    """``out += w * a^T x``."""
    for r in range(6):
        acc = 0.0
        for k in range(6):
            acc += a[k, r] * x[k]
        out[r] += w * acc


@njit(cache=True, inline="always")
def _skew_block(v0, v1, v2, out, r0, c0):
    out[r0, c0 + 1] = -v2
    out[r0, c0 + 2] = v1
    out[r0 + 1, c0] = v2
    out[r0 + 1, c0 + 2] = -v0
    out[r0 + 2, c0] = -v1
    out[r0 + 2, c0 + 1] = v0


@njit(cache=True, inline="always")
def _ad_into(x, out):
    """``ad_x`` = [[w^, 0], [v^, w^]] written into ``out``."""
    out[:, :] = 0.0
    _skew_block(x[0], x[1], x[2], out, 0, 0)
    _skew_block(x[0], x[1], x[2], out, 3, 3)
    _skew_block(x[3], x[4], x[5], out, 3, 0)


@njit(cache=True, inline="always")
def _combo(pw, lead, coef, out):
    """``out = lead * I + sum_j coef[j] * pw[j + 1]``."""
    for r in range(6):
        for c in range(6):
            out[r, c] = (coef[0] * pw[1, r, c] + coef[1] * pw[2, r, c]
                         + coef[2] * pw[3, r, c] + coef[3] * pw[4, r, c])
        out[r, r] += lead


@njit(cache=True)
def _exp_ad_into(pw, theta, t, coef, out):
    a = exp_coeffs(abs(t) * theta)
    tj = 1.0
    for j in range(4):
        tj *= t
        coef[j] = tj * a[j]
    _combo(pw, 1.0, coef, out)


@njit(cache=True)
def _tangent_into(pw, theta, s, coef, out):
    b = tangent_coeffs(theta * s)
    sj = s
    sign = 1.0
    for j in range(4):
        sj *= s
        sign = -sign
        coef[j] = sign * sj * b[j]
    _combo(pw, s, coef, out)


@njit(cache=True)
def _tangent_dot_into(pw, dpw, theta, gdot, s, coef, out):
    b = tangent_coeffs(theta * s)
    c = tangent_dcoeffs(theta * s)
    sj = s
    sign = 1.0
    for j in range(4):
        sj *= s
        coef[j] = -sign * sj * s * s * c[j] * gdot
        coef[4 + j] = -sign * sj * b[j]
        sign = -sign
    for r in range(6):
        for cc in range(6):
            acc = 0.0
            for j in range(4):
                acc += coef[j] * pw[j + 1, r, cc] + coef[4 + j] * dpw[j + 1, r, cc]
            out[r, cc] = acc


@njit(cache=True)
def _section_pass(xi, xid, lengths):
    n_sec = xi.shape[0]
    pw = np.empty((n_sec, 5, 6, 6))
    dpw = np.empty((n_sec, 5, 6, 6))
    theta = np.empty(n_sec)
    gdot = np.empty(n_sec)
    P = np.empty((n_sec, 6, 6))
    T = np.empty((n_sec, 6, 6))
    Td = np.empty((n_sec, 6, 6))
    coef = np.empty(8)
    for i in range(n_sec):
        pw[i] = _ad_powers(_ad(xi[i]))
        dpw[i] = _dpowers(pw[i], _ad(xid[i]))
        theta[i] = np.sqrt(xi[i, 0] ** 2 + xi[i, 1] ** 2 + xi[i, 2] ** 2)
        gdot[i] = xi[i, 0] * xid[i, 0] + xi[i, 1] * xid[i, 1] + xi[i, 2] * xid[i, 2]
        _exp_ad_into(pw[i], theta[i], -lengths[i], coef, P[i])
        _tangent_into(pw[i], theta[i], lengths[i], coef, T[i])
        _tangent_dot_into(pw[i], dpw[i], theta[i], gdot[i], lengths[i], coef, Td[i])
    # twist, J-tilde twist and Ad^-1_g at the start of every section
    eta0 = np.zeros((n_sec + 1, 6))
    zeta0 = np.zeros((n_sec + 1, 6))
    adg0 = np.empty((n_sec + 1, 6, 6))
    adg0[0] = np.eye(6)
    Tt = np.empty((n_sec, 6, 6))
    adb = np.empty((6, 6))
    for i in range(n_sec):
        _mv(P[i], eta0[i], eta0[i + 1])
        _acc_mv(1.0, T[i], xid[i], eta0[i + 1])
        _mm(P[i], adg0[i], adg0[i + 1])
        _ad_into(eta0[i + 1], adb)
        _mm(adb, T[i], Tt[i])
        Tt[i] += Td[i]
        _mv(P[i], zeta0[i], zeta0[i + 1])
        _acc_mv(1.0, Tt[i], xid[i], zeta0[i + 1])
    return pw, dpw, theta, gdot, P, T, Td, eta0, adg0, Tt, zeta0


@njit(cache=True)
def _compose(G, H, Hp, K, P, T, R):
    """Dense ``sum w L^T W R`` from per-section sums (left ops ``T``, right ops ``R``)."""
    n_sec = P.shape[0]
    out = np.zeros((6 * n_sec, 6 * n_sec))
    Ibar = np.zeros((n_sec, 6, 6))
    t1 = np.empty((6, 6))
    t2 = np.empty((6, 6))
    Y = np.empty((6, 6))
    for l in range(n_sec - 2, -1, -1):
        _tmm(P[l + 1], Ibar[l + 1], t1)
        _mm(t1, P[l + 1], Ibar[l])
        Ibar[l] += G[l + 1]
    for l in range(n_sec):
        _mm(Ibar[l], R[l], t1)                       # Ibar R
        _tmm(T[l], t1, t2)
        out[6 * l:6 * l + 6, 6 * l:6 * l + 6] = t2 + K[l]
        _tmm(P[l], t1, Y)
        Y += H[l]
        for k in range(l - 1, -1, -1):
            _tmm(T[k], Y, t2)
            out[6 * k:6 * k + 6, 6 * l:6 * l + 6] = t2
            _tmm(P[k], Y, t1)
            Y[:, :] = t1
        _tmm(T[l], Ibar[l], t1)
        _mm(t1, P[l], Y)
        Y += Hp[l]
        for j in range(l - 1, -1, -1):
            _mm(Y, R[j], t2)
            out[6 * l:6 * l + 6, 6 * j:6 * j + 6] = t2
            _mm(Y, P[j], t1)
            Y[:, :] = t1
    return out


@njit(cache=True)
def _compose_vec(Vs, Vown, P, T):
    """``sum w J^T Y`` for node quantities ``Y`` with ``c`` columns."""
    n_sec = P.shape[0]
    c = Vs.shape[2]
    out = np.zeros((6 * n_sec, c))
    Vbar = np.zeros((6, c))
    for l in range(n_sec - 1, -1, -1):
        out[6 * l:6 * l + 6] = T[l].T @ Vbar + Vown[l]
        Vbar = Vs[l] + P[l].T @ Vbar
    return out


@njit(cache=True)
def assemble_kernel(xi, xid, lengths, node_sec, node_s, wts, Ma, Mb, drag):
    """Assemble ``M, C1, C2, D, N`` for each weight row of ``wts``.

    ``Ma`` is the (added) screw inertia per section, ``Mb`` the buoyancy-scaled
    inertia, ``drag`` the diagonal drag coefficients.  Returns arrays with a
    leading mask axis.
    """
    n_sec = xi.shape[0]
    n_mask = wts.shape[0]
    pw, dpw, theta, gdot, P, T, Td, eta0, adg0, Tt, zeta0 = _section_pass(xi, xid, lengths)
    # forms: 0 M, 1 C1, 2 C2 (-M ad_eta part), 3 D, 4 C2 (J-tilde part)
    G = np.zeros((5, n_mask, n_sec, 6, 6))
    H = np.zeros((5, n_mask, n_sec, 6, 6))
    Hp = np.zeros((5, n_mask, n_sec, 6, 6))
    K = np.zeros((5, n_mask, n_sec, 6, 6))
    Vs = np.zeros((n_mask, n_sec, 6, 6))
    Vown = np.zeros((n_mask, n_sec, 6, 6))
    W = np.zeros((4, 6, 6))
    prod = np.empty((6, 6, 6))  # g, h, hp, k, h4, k4
    A = np.empty((6, 6))
    Ts = np.empty((6, 6))
    Tds = np.empty((6, 6))
    adE = np.empty((6, 6))
    Rown = np.empty((6, 6))
    AtW = np.empty((6, 6))
    TtW = np.empty((6, 6))
    Y = np.empty((6, 6))
    AtY = np.empty((6, 6))
    TtY = np.empty((6, 6))
    eta = np.empty(6)
    coef = np.empty(8)
    for p in range(node_s.shape[0]):
        i = node_sec[p]
        s = node_s[p]
        used = False
        for mk in range(n_mask):
            if wts[mk, p] != 0.0:
                used = True
        if not used:
            continue
        _exp_ad_into(pw[i], theta[i], -s, coef, A)
        _tangent_into(pw[i], theta[i], s, coef, Ts)
        _tangent_dot_into(pw[i], dpw[i], theta[i], gdot[i], s, coef, Tds)
        _mv(A, eta0[i], eta)
        _acc_mv(1.0, Ts, xid[i], eta)
        _ad_into(eta, adE)
        speed = np.sqrt(eta[3] ** 2 + eta[4] ** 2 + eta[5] ** 2)
        W[0] = Ma[i]
        _tmm(adE, Ma[i], W[1])
        W[1] *= -1.0
        _mm(Ma[i], adE, W[2])
        W[2] *= -1.0
        for d in range(6):
            W[3, d, d] = drag[i, d] * speed
        _mm(adE, Ts, Rown)
        Rown += Tds
        _mm(A, adg0[i], AtW)
        _mm(Mb[i], AtW, Y)
        _tmm(A, Y, AtY)
        _tmm(Ts, Y, TtY)
        for f in range(4):
            _tmm(A, W[f], AtW)
            _tmm(Ts, W[f], TtW)
            _mm(AtW, A, prod[0])
            _mm(AtW, Ts, prod[1])
            _mm(TtW, A, prod[2])
            _mm(TtW, Ts, prod[3])
            if f == 0:
                _mm(AtW, Rown, prod[4])
                _mm(TtW, Rown, prod[5])
            for mk in range(n_mask):
                w = wts[mk, p]
                if w == 0.0:
                    continue
                for r in range(6):
                    for c in range(6):
                        G[f, mk, i, r, c] += w * prod[0, r, c]
                        H[f, mk, i, r, c] += w * prod[1, r, c]
                        Hp[f, mk, i, r, c] += w * prod[2, r, c]
                        K[f, mk, i, r, c] += w * prod[3, r, c]
                        if f == 0:
                            G[4, mk, i, r, c] += w * prod[0, r, c]
                            Hp[4, mk, i, r, c] += w * prod[2, r, c]
                            H[4, mk, i, r, c] += w * prod[4, r, c]
                            K[4, mk, i, r, c] += w * prod[5, r, c]
                            Vs[mk, i, r, c] += w * AtY[r, c]
                            Vown[mk, i, r, c] += w * TtY[r, c]
    n = 6 * n_sec
    out = np.zeros((5, n_mask, n, n))
    Nm = np.zeros((n_mask, n, 6))
    for mk in range(n_mask):
        for f in range(4):
            out[f, mk] = _compose(G[f, mk], H[f, mk], Hp[f, mk], K[f, mk], P, T, T)
        out[4, mk] = _compose(G[4, mk], H[4, mk], Hp[4, mk], K[4, mk], P, T, Tt)
        Nm[mk] = _compose_vec(Vs[mk], Vown[mk], P, T)
    return out[0], out[1], out[2] + out[4], out[3], Nm


@njit(cache=True)
def bias_kernel(xi, xid, lengths, node_sec, node_s, w_in, w_drag, w_grav, Ma, Mb, drag, grav, want_mass):
    """Newton-Euler sweep for ``(C1 + C2) qdot``, ``D qdot`` and ``-N grav``.

    Each of the three contributions has its own quadrature weights, so one
    sweep yields the full-arm bias or any masked mix of it (the quasi-steady
    equation wants inertia and gravity on one mask and drag on another).  With
    ``want_mass`` the mass matrix over ``w_in`` is assembled as well.
    ``grav`` is the gravity screw already expressed in the base frame.
    """
    n_sec = xi.shape[0]
    pw, dpw, theta, gdot, P, T, Td, eta0, adg0, Tt, zeta0 = _section_pass(xi, xid, lengths)
    G = np.zeros((n_sec, 6, 6))
    H = np.zeros((n_sec, 6, 6))
    K = np.zeros((n_sec, 6, 6))
    Fs = np.zeros((n_sec, 6, 1))
    Fown = np.zeros((n_sec, 6, 1))
    gsec = np.empty((n_sec, 6))
    for i in range(n_sec):
        _mv(adg0[i], grav, gsec[i])
    A = np.empty((6, 6))
    Ts = np.empty((6, 6))
    Tds = np.empty((6, 6))
    adE = np.empty((6, 6))
    AtW = np.empty((6, 6))
    TtW = np.empty((6, 6))
    v1 = np.empty(6)
    eta = np.empty(6)
    acc = np.empty(6)
    mom = np.empty(6)
    gl = np.empty(6)
    f = np.empty(6)
    coef = np.empty(8)
    for p in range(node_s.shape[0]):
        wi = w_in[p]
        wd = w_drag[p]
        wg = w_grav[p]
        if wi == 0.0 and wd == 0.0 and wg == 0.0:
            continue
        i = node_sec[p]
        s = node_s[p]
        _exp_ad_into(pw[i], theta[i], -s, coef, A)
        _tangent_into(pw[i], theta[i], s, coef, Ts)
        _mv(Ts, xid[i], v1)
        _mv(A, eta0[i], eta)
        eta += v1
        f[:] = 0.0
        if wi != 0.0:
            _tangent_dot_into(pw[i], dpw[i], theta[i], gdot[i], s, coef, Tds)
            _ad_into(eta, adE)
            # J-dot qdot at the node: A zeta0 + (ad_eta T_s + Tdot_s) xidot
            _mv(A, zeta0[i], acc)
            _acc_mv(1.0, adE, v1, acc)
            _acc_mv(1.0, Tds, xid[i], acc)
            _mv(Ma[i], eta, mom)
            _acc_mv(wi, Ma[i], acc, f)
            _acc_tmv(-wi, adE, mom, f)
        if wg != 0.0:
            _mv(A, gsec[i], gl)
            _acc_mv(-wg, Mb[i], gl, f)
        if wd != 0.0:
            speed = np.sqrt(eta[3] ** 2 + eta[4] ** 2 + eta[5] ** 2)
            for d in range(6):
                f[d] += wd * drag[i, d] * speed * eta[d]
        if want_mass and wi != 0.0:
            _tmm(A, Ma[i], AtW)
            _tmm(Ts, Ma[i], TtW)
            _acc_mm(wi, AtW, A, G[i])
            _acc_mm(wi, AtW, Ts, H[i])
            _acc_mm(wi, TtW, Ts, K[i])
        _acc_tmv(1.0, A, f, Fs[i, :, 0])
        _acc_tmv(1.0, Ts, f, Fown[i, :, 0])
    b = _compose_vec(Fs, Fown, P, T)[:, 0]
    if not want_mass:
        return np.zeros((0, 0)), b
    Hp = np.empty_like(H)
    for i in range(n_sec):
        Hp[i] = H[i].T
    return _compose(G, H, Hp, K, P, T, T), b


@njit(cache=True)
def point_jacobian(xi, lengths, i, s):
    """Body Jacobian at local arclength ``s`` of section ``i`` and ``Ad^-1`` of the base-relative pose."""
    n_sec = xi.shape[0]
    J = np.zeros((6, 6 * n_sec))
    coef = np.empty(8)
    A = np.empty((6, 6))
    Pk = np.empty((6, 6))
    Tk = np.empty((6, 6))
    tmp = np.empty((6, 6))
    adg = np.eye(6)
    for k in range(i):
        pwk = _ad_powers(_ad(xi[k]))
        th = np.sqrt(xi[k, 0] ** 2 + xi[k, 1] ** 2 + xi[k, 2] ** 2)
        _exp_ad_into(pwk, th, -lengths[k], coef, Pk)
        _mm(Pk, adg, tmp)
        adg[:, :] = tmp
    pwi = _ad_powers(_ad(xi[i]))
    thi = np.sqrt(xi[i, 0] ** 2 + xi[i, 1] ** 2 + xi[i, 2] ** 2)
    _exp_ad_into(pwi, thi, -s, coef, A)
    _tangent_into(pwi, thi, s, coef, Tk)
    J[:, 6 * i:6 * i + 6] = Tk
    _mm(A, adg, tmp)
    adg_x = tmp.copy()
    H = A.copy()
    for k in range(i - 1, -1, -1):
        pwk = _ad_powers(_ad(xi[k]))
        th = np.sqrt(xi[k, 0] ** 2 + xi[k, 1] ** 2 + xi[k, 2] ** 2)
        _tangent_into(pwk, th, lengths[k], coef, Tk)
        _mm(H, Tk, tmp)
        J[:, 6 * k:6 * k + 6] = tmp
        _exp_ad_into(pwk, th, -lengths[k], coef, Pk)
        _mm(H, Pk, tmp)
        H[:, :] = tmp
    return J, adg_x
