"""Compiled inner loops: scene force field and the Dormand-Prince stepper.

Scenes are passed as three flat arrays (see ``SceneGeometry.packed``):

params
    ``[kind, g, m, k, c, beta_gwf, beta_o]`` with kind 0 = ballistic, 1 = spring.
walls
    ``(n_walls, 3)`` rows of ``[axis, offset, side]``; side +1 keeps the ball
    at ``coord >= offset``, -1 keeps it at ``coord <= offset``.
obstacles
    ``(n_obstacles, 7)`` rows of ``[x, y, z, yaw, l, w, h]`` where ``(x, y, z)``
    is the centre of the obstacle base.
"""

import math

import numpy as np
from numba import njit

KIND_BALLISTIC = 0
KIND_SPRING = 1

STATUS_OK = 0
STATUS_STEP_LIMIT = 1
STATUS_NONFINITE = 2


@njit(cache=True)
def sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def dsigmoid(x):
    e = math.exp(-abs(x))
    return e / ((1.0 + e) * (1.0 + e))


@njit(cache=True)
def d2sigmoid(x):
    return -dsigmoid(x) * math.tanh(0.5 * x)


@njit(cache=True)
def relu(x):
    return x if x > 0.0 else 0.0


@njit(cache=True)
def sigmoid_window(a, b):
    """sigmoid(a) - sigmoid(b), evaluated on the side with less cancellation."""
    if a > 0.0 and b > 0.0:
        return sigmoid(-b) - sigmoid(-a)
    return sigmoid(a) - sigmoid(b)


@njit(cache=True)
def _box_factors(p, l, w, h, beta, out):
    # out[i, 0..2] = factor, first and second derivative along axis i
    lo0 = -l
    hi0 = l
    lo1 = -w
    hi1 = w
    lo2 = 0.0
    hi2 = h
    for i in range(3):
        if i == 0:
            lo, hi = lo0, hi0
        elif i == 1:
            lo, hi = lo1, hi1
        else:
            lo, hi = lo2, hi2
        a = beta * (p[i] - lo)
        b = beta * (p[i] - hi)
        out[i, 0] = sigmoid_window(a, b)
        out[i, 1] = beta * (dsigmoid(a) - dsigmoid(b))
        out[i, 2] = beta * beta * (d2sigmoid(a) - d2sigmoid(b))


@njit(cache=True)
def _object_frame(r, ob, p):
    cy = math.cos(ob[3])
    sy = math.sin(ob[3])
    dx = r[0] - ob[0]
    dy = r[1] - ob[1]
    p[0] = cy * dx + sy * dy
    p[1] = -sy * dx + cy * dy
    p[2] = r[2] - ob[2]


@njit(cache=True)
def potential_per_mass(r, params, walls, obstacles):
    """Potential energy divided by the mass (J/kg), exact ReLU barriers."""
    kind = int(params[0])
    if kind == KIND_SPRING:
        k_over_m = params[3] / params[2]
        return 0.5 * k_over_m * (r[0] * r[0] + r[1] * r[1] + r[2] * r[2])
    g = params[1]
    c = params[4]
    beta_o = params[6]
    v = g * relu(r[2]) + c * relu(-r[2])
    for i in range(walls.shape[0]):
        ax = int(walls[i, 0])
        if walls[i, 2] > 0:
            v += c * relu(walls[i, 1] - r[ax])
        else:
            v += c * relu(r[ax] - walls[i, 1])
    p = np.empty(3)
    f = np.empty((3, 3))
    for j in range(obstacles.shape[0]):
        ob = obstacles[j]
        _object_frame(r, ob, p)
        _box_factors(p, ob[4], ob[5], ob[6], beta_o, f)
        v += c / beta_o * f[0, 0] * f[1, 0] * f[2, 0]
    return v


@njit(cache=True)
def accel_jac(r, params, walls, obstacles, a, J, want_jac):
    """Acceleration at ``r`` and, if ``want_jac``, its Jacobian w.r.t. ``r``.

    Barrier derivatives use ``d/dx ReLU(x) ~ sigmoid(beta_gwf * x)``; the
    obstacle term is the exact gradient of the sigmoid box potential.
    """
    for i in range(3):
        a[i] = 0.0
        if want_jac:
            for j in range(3):
                J[i, j] = 0.0
    kind = int(params[0])
    if kind == KIND_SPRING:
        k_over_m = params[3] / params[2]
        for i in range(3):
            a[i] = -k_over_m * r[i]
            if want_jac:
                J[i, i] = -k_over_m
        return

    g = params[1]
    c = params[4]
    bg = params[5]
    beta_o = params[6]

    z = r[2]
    a[2] = -g * sigmoid(bg * z) + c * sigmoid(-bg * z)
    if want_jac:
        J[2, 2] = -g * bg * dsigmoid(bg * z) - c * bg * dsigmoid(-bg * z)

    for i in range(walls.shape[0]):
        ax = int(walls[i, 0])
        off = walls[i, 1]
        if walls[i, 2] > 0:
            x = bg * (off - r[ax])
            a[ax] += c * sigmoid(x)
        else:
            x = bg * (r[ax] - off)
            a[ax] -= c * sigmoid(x)
        if want_jac:
            J[ax, ax] -= c * bg * dsigmoid(x)

    if obstacles.shape[0] == 0:
        return
    p = np.empty(3)
    f = np.empty((3, 3))
    grad = np.empty(3)
    H = np.empty((3, 3))
    scale = c / beta_o
    for j in range(obstacles.shape[0]):
        ob = obstacles[j]
        _object_frame(r, ob, p)
        _box_factors(p, ob[4], ob[5], ob[6], beta_o, f)
        grad[0] = scale * f[0, 1] * f[1, 0] * f[2, 0]
        grad[1] = scale * f[0, 0] * f[1, 1] * f[2, 0]
        grad[2] = scale * f[0, 0] * f[1, 0] * f[2, 1]
        cy = math.cos(ob[3])
        sy = math.sin(ob[3])
        # world gradient = Q^T grad with Q the yaw rotation into the object frame
        a[0] -= cy * grad[0] - sy * grad[1]
        a[1] -= sy * grad[0] + cy * grad[1]
        a[2] -= grad[2]
        if want_jac:
            H[0, 0] = scale * f[0, 2] * f[1, 0] * f[2, 0]
            H[1, 1] = scale * f[0, 0] * f[1, 2] * f[2, 0]
            H[2, 2] = scale * f[0, 0] * f[1, 0] * f[2, 2]
            H[0, 1] = H[1, 0] = scale * f[0, 1] * f[1, 1] * f[2, 0]
            H[0, 2] = H[2, 0] = scale * f[0, 1] * f[1, 0] * f[2, 1]
            H[1, 2] = H[2, 1] = scale * f[0, 0] * f[1, 1] * f[2, 1]
            # J -= Q^T H Q
            Q = np.array([[cy, sy, 0.0], [-sy, cy, 0.0], [0.0, 0.0, 1.0]])
            QtHQ = Q.T @ H @ Q
            for i in range(3):
                for k in range(3):
                    J[i, k] -= QtHQ[i, k]


# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# difference between 5th and embedded 4th order weights
_E1 = 71.0 / 57600.0
_E3 = -71.0 / 16695.0
_E4 = 71.0 / 1920.0
_E5 = -17253.0 / 339200.0
_E6 = 22.0 / 525.0
_E7 = -1.0 / 40.0


@njit(cache=True)
def _rhs(y, S, params, walls, obstacles, dy, dS, a, J, want_jac):
    accel_jac(y[:3], params, walls, obstacles, a, J, want_jac)
    for i in range(3):
        dy[i] = y[3 + i]
        dy[3 + i] = a[i]
    P = S.shape[1]
    for col in range(P):
        for i in range(3):
            dS[i, col] = S[3 + i, col]
            acc = 0.0
            for k in range(3):
                acc += J[i, k] * S[k, col]
            dS[3 + i, col] = acc


@njit(cache=True)
def dopri5_segment(y, S, t0, t1, params, walls, obstacles, rtol, atol, max_steps, h_init, stats):
    """Advance ``y`` (6,) and sensitivities ``S`` (6, P) in place from t0 to t1.

    Step-size control reads only the primal state, so the primal path does
    not depend on the number of sensitivity columns. ``stats`` receives
    ``[t_reached, n_accepted, n_rejected]``. Returns a status code.
    """
    stats[0] = t0
    if t1 <= t0:
        return STATUS_OK
    P = S.shape[1]
    want_jac = P > 0
    a = np.empty(3)
    J = np.zeros((3, 3))
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    k5 = np.empty(6)
    k6 = np.empty(6)
    k7 = np.empty(6)
    s1 = np.empty((6, P))
    s2 = np.empty((6, P))
    s3 = np.empty((6, P))
    s4 = np.empty((6, P))
    s5 = np.empty((6, P))
    s6 = np.empty((6, P))
    s7 = np.empty((6, P))
    yt = np.empty(6)
    St = np.empty((6, P))
    ynew = np.empty(6)
    Snew = np.empty((6, P))

    _rhs(y, S, params, walls, obstacles, k1, s1, a, J, want_jac)
    t = t0
    h = min(h_init, t1 - t0)
    n_steps = 0
    n_acc = 0
    n_rej = 0
    while t < t1:
        if n_steps >= max_steps:
            stats[0] = t
            stats[1] = n_acc
            stats[2] = n_rej
            return STATUS_STEP_LIMIT
        n_steps += 1
        last = False
        if t + 1.01 * h >= t1:
            h = t1 - t
            last = True

        for i in range(6):
            yt[i] = y[i] + h * _A21 * k1[i]
        for i in range(6):
            for c in range(P):
                St[i, c] = S[i, c] + h * _A21 * s1[i, c]
        _rhs(yt, St, params, walls, obstacles, k2, s2, a, J, want_jac)

        for i in range(6):
            yt[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        for i in range(6):
            for c in range(P):
                St[i, c] = S[i, c] + h * (_A31 * s1[i, c] + _A32 * s2[i, c])
        _rhs(yt, St, params, walls, obstacles, k3, s3, a, J, want_jac)

        for i in range(6):
            yt[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        for i in range(6):
            for c in range(P):
                St[i, c] = S[i, c] + h * (_A41 * s1[i, c] + _A42 * s2[i, c] + _A43 * s3[i, c])
        _rhs(yt, St, params, walls, obstacles, k4, s4, a, J, want_jac)

        for i in range(6):
            yt[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        for i in range(6):
            for c in range(P):
                St[i, c] = S[i, c] + h * (_A51 * s1[i, c] + _A52 * s2[i, c] + _A53 * s3[i, c] + _A54 * s4[i, c])
        _rhs(yt, St, params, walls, obstacles, k5, s5, a, J, want_jac)

        for i in range(6):
            yt[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i])
        for i in range(6):
            for c in range(P):
                St[i, c] = S[i, c] + h * (
                    _A61 * s1[i, c] + _A62 * s2[i, c] + _A63 * s3[i, c] + _A64 * s4[i, c] + _A65 * s5[i, c]
                )
        _rhs(yt, St, params, walls, obstacles, k6, s6, a, J, want_jac)

        for i in range(6):
            ynew[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
        for i in range(6):
            for c in range(P):
                Snew[i, c] = S[i, c] + h * (
                    _B1 * s1[i, c] + _B3 * s3[i, c] + _B4 * s4[i, c] + _B5 * s5[i, c] + _B6 * s6[i, c]
                )
        _rhs(ynew, Snew, params, walls, obstacles, k7, s7, a, J, want_jac)

        err = 0.0
        finite = True
        for i in range(6):
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err += (e / sc) * (e / sc)
            if not math.isfinite(ynew[i]):
                finite = False
        if not finite:
            stats[0] = t
            stats[1] = n_acc
            stats[2] = n_rej
            return STATUS_NONFINITE
        err = math.sqrt(err / 6.0)

        if err <= 1.0:
            t = t1 if last else t + h
            for i in range(6):
                y[i] = ynew[i]
                k1[i] = k7[i]
            for i in range(6):
                for c in range(P):
                    S[i, c] = Snew[i, c]
                    s1[i, c] = s7[i, c]
            n_acc += 1
            if err == 0.0:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = h * fac
        else:
            n_rej += 1
            h = h * max(0.2, 0.9 * err ** -0.2)
    stats[0] = t
    stats[1] = n_acc
    stats[2] = n_rej
    return STATUS_OK


@njit(cache=True)
def dopri5_sample(y0, S0, t0, times, params, walls, obstacles, rtol, atol, max_steps, h_init, ys, Ss, stats):
    """Chain ``dopri5_segment`` through ascending ``times``; fill ``ys``/``Ss``.

    Each segment starts afresh from ``h_init``. ``stats`` accumulates
    ``[t_reached, n_accepted, n_rejected]`` over all segments.
    """
    y = y0.copy()
    S = S0.copy()
    t = t0
    seg = np.zeros(3)
    stats[1] = 0.0
    stats[2] = 0.0
    for j in range(times.shape[0]):
        status = dopri5_segment(y, S, t, times[j], params, walls, obstacles, rtol, atol, max_steps, h_init, seg)
        stats[0] = seg[0]
        stats[1] += seg[1]
        stats[2] += seg[2]
        if status != STATUS_OK:
            return status
        t = times[j]
        for i in range(6):
            ys[j, i] = y[i]
            for c in range(S.shape[1]):
                Ss[j, i, c] = S[i, c]
    return STATUS_OK


@njit(cache=True)
def dopri5_batch(Y0, S0, t0s, times, params, walls, obstacles, rtol, atol, max_steps, h_init, ys, Ss, stats):
    """Run :func:`dopri5_sample` for every row of ``Y0``; stop at the first failure.

    ``times`` has shape (B, T); ``ys`` (B, T, 6) and ``Ss`` (B, T, 6, P).
    Returns ``(status, failing_row)``.
    """
    for b in range(Y0.shape[0]):
        status = dopri5_sample(Y0[b], S0[b], t0s[b], times[b], params, walls, obstacles,
                               rtol, atol, max_steps, h_init, ys[b], Ss[b], stats)
        if status != STATUS_OK:
            return status, b
    return STATUS_OK, -1
