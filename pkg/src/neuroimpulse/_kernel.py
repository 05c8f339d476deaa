"""Compiled fixed-step RK4 integrator with threshold-event localization.

The kernel knows nothing about specification objects; :mod:`hybridsim`
flattens a plant/controller pair into plain arrays before calling it.

Row kinds in the output buffer: 0 grid sample, 1 pre-event limit,
2 post-event value, 3 state at which the overflow guard tripped.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_DIVERGED = 1
STATUS_CASCADE = 2

ROW_GRID = 0
ROW_PRE = 1
ROW_POST = 2
ROW_GUARD = 3


@njit(cache=True, inline='always')
def _deriv(x, z, drift_kind, A, dp, W, rectify, lams, dx, dz):
    K = x.shape[0]
    N = z.shape[0]
    if drift_kind == 0:
        for i in range(K):
            s = 0.0
            for j in range(K):
                s += A[i, j] * x[j]
            dx[i] = s
    else:
        for i in range(K):
            dx[i] = dp[0] * x[i] - dp[1] * x[i] * x[i] * x[i]
    for i in range(N):
        s = 0.0
        for j in range(K):
            s += W[i, j] * x[j]
        if rectify and s < 0.0:
            s = 0.0
        dz[i] = s - lams[i] * z[i]


@njit(cache=True, inline='always')
def _rk4(x, z, h, xo, zo, wx, wz, drift_kind, A, dp, W, rectify, lams):
    """One classical RK4 step of size ``h`` from ``(x, z)`` into ``(xo, zo)``.

    ``wx``/``wz`` are (5, dim) scratch buffers: rows 0-3 hold the stages,
    row 4 the intermediate state.
    """
    K = x.shape[0]
    N = z.shape[0]
    _deriv(x, z, drift_kind, A, dp, W, rectify, lams, wx[0], wz[0])
    for i in range(K):
        wx[4, i] = x[i] + 0.5 * h * wx[0, i]
    for i in range(N):
        wz[4, i] = z[i] + 0.5 * h * wz[0, i]
    _deriv(wx[4], wz[4], drift_kind, A, dp, W, rectify, lams, wx[1], wz[1])
    for i in range(K):
        wx[4, i] = x[i] + 0.5 * h * wx[1, i]
    for i in range(N):
        wz[4, i] = z[i] + 0.5 * h * wz[1, i]
    _deriv(wx[4], wz[4], drift_kind, A, dp, W, rectify, lams, wx[2], wz[2])
    for i in range(K):
        wx[4, i] = x[i] + h * wx[2, i]
    for i in range(N):
        wz[4, i] = z[i] + h * wz[2, i]
    _deriv(wx[4], wz[4], drift_kind, A, dp, W, rectify, lams, wx[3], wz[3])
    for i in range(K):
        xo[i] = x[i] + h / 6.0 * (wx[0, i] + 2.0 * wx[1, i] + 2.0 * wx[2, i] + wx[3, i])
    for i in range(N):
        zo[i] = z[i] + h / 6.0 * (wz[0, i] + 2.0 * wz[1, i] + 2.0 * wz[2, i] + wz[3, i])


@njit(cache=True)
def _crossed(z, thr):
    for i in range(z.shape[0]):
        if z[i] >= thr[i]:
            return True
    return False


@njit(cache=True)
def _norm(x):
    s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * x[i]
    return np.sqrt(s)


@njit(cache=True)
def _grow_f1(a):
    b = np.empty(2 * a.shape[0], a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _grow_f2(a):
    b = np.empty((2 * a.shape[0], a.shape[1]), a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _grow_i1(a):
    b = np.empty(2 * a.shape[0], a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def integrate(grid, x0, z0, event_tol, guard,
              drift_kind, A, dp, W, rectify, lams, thr, B, G, reset_zero,
              store_rows, max_cascade):
    """Integrate the hybrid system over ``grid``.

    Returns ``(status, t, x, z, rows_t, rows_x, rows_z, rows_kind, n_rows,
    ev_t, ev_unit, n_ev)``.
    """
    K = x0.shape[0]
    N = z0.shape[0]
    n_grid = grid.shape[0]

    cap = n_grid + 16 if store_rows else 16
    rows_t = np.empty(cap)
    rows_x = np.empty((cap, K))
    rows_z = np.empty((cap, N))
    rows_kind = np.empty(cap, np.int8)
    n_rows = 0
    ev_cap = 64
    ev_t = np.empty(ev_cap)
    ev_unit = np.empty(ev_cap, np.int64)
    n_ev = 0

    x = x0.copy()
    z = z0.copy()
    xn = np.empty(K)
    zn = np.empty(N)
    xl = np.empty(K)
    zl = np.empty(N)
    wx = np.empty((5, K))
    wz = np.empty((5, N))
    t_cross = np.empty(N)
    shortfall = np.empty(N)

    t = grid[0]
    if store_rows:
        rows_t[0] = t
        rows_x[0] = x
        rows_z[0] = z
        rows_kind[0] = 0
        n_rows = 1

    for k in range(1, n_grid):
        t_target = grid[k]
        while True:
            h = t_target - t
            if h <= 0.0:
                t = t_target
                break
            _rk4(x, z, h, xn, zn, wx, wz, drift_kind, A, dp, W, rectify, lams)
            if not _crossed(zn, thr):
                x[:] = xn
                z[:] = zn
                t = t_target
                break

            # bisection on the step length; at lo nobody has crossed, at hi somebody has
            lo = 0.0
            hi = h
            while hi - lo > event_tol:
                mid = 0.5 * (lo + hi)
                _rk4(x, z, mid, xn, zn, wx, wz, drift_kind, A, dp, W, rectify, lams)
                if _crossed(zn, thr):
                    hi = mid
                else:
                    lo = mid
            if lo > 0.0:
                _rk4(x, z, lo, xl, zl, wx, wz, drift_kind, A, dp, W, rectify, lams)
            else:
                zl[:] = z
            _rk4(x, z, hi, xn, zn, wx, wz, drift_kind, A, dp, W, rectify, lams)

            # secant refinement inside the final bracket
            s_ev = hi
            for i in range(N):
                t_cross[i] = np.inf
                if zn[i] >= thr[i]:
                    dz_ = zn[i] - zl[i]
                    frac = 1.0
                    if dz_ > 0.0:
                        frac = (thr[i] - zl[i]) / dz_
                        if frac < 0.0:
                            frac = 0.0
                        elif frac > 1.0:
                            frac = 1.0
                    t_cross[i] = lo + frac * (hi - lo)
                    if t_cross[i] < s_ev:
                        s_ev = t_cross[i]
            _rk4(x, z, s_ev, xn, zn, wx, wz, drift_kind, A, dp, W, rectify, lams)
            x[:] = xn
            z[:] = zn
            t = t + s_ev
            for i in range(N):
                d = thr[i] - z[i]
                shortfall[i] = d if d > 0.0 else 0.0

            fired = 0
            for pass_ in range(2):
                # pass 0: units crossing within event_tol of the earliest, ascending index;
                # pass 1: cascade of units pushed over threshold by coupled resets.
                while True:
                    unit = -1
                    for i in range(N):
                        if pass_ == 0:
                            if t_cross[i] - s_ev < event_tol and z[i] >= thr[i] - shortfall[i] - 1e-15:
                                unit = i
                                break
                        elif z[i] >= thr[i]:
                            unit = i
                            break
                    if unit < 0:
                        break
                    if pass_ == 0:
                        t_cross[unit] = np.inf
                    fired += 1
                    if fired > max_cascade:
                        return (STATUS_CASCADE, t, x, z, rows_t, rows_x, rows_z, rows_kind, n_rows,
                                ev_t, ev_unit, n_ev)
                    if store_rows:
                        if n_rows + 2 >= rows_t.shape[0]:
                            rows_t = _grow_f1(rows_t)
                            rows_x = _grow_f2(rows_x)
                            rows_z = _grow_f2(rows_z)
                            rows_kind = _grow_i1(rows_kind)
                        rows_t[n_rows] = t
                        rows_x[n_rows] = x
                        rows_z[n_rows] = z
                        rows_kind[n_rows] = 1
                        n_rows += 1
                    for j in range(K):
                        x[j] += B[j, unit]
                    if reset_zero:
                        z[unit] = 0.0
                    else:
                        for j in range(N):
                            z[j] -= G[j, unit]
                    if store_rows:
                        rows_t[n_rows] = t
                        rows_x[n_rows] = x
                        rows_z[n_rows] = z
                        rows_kind[n_rows] = 2
                        n_rows += 1
                    if n_ev >= ev_t.shape[0]:
                        ev_t = _grow_f1(ev_t)
                        ev_unit = _grow_i1(ev_unit)
                    ev_t[n_ev] = t
                    ev_unit[n_ev] = unit
                    n_ev += 1

            if _norm(x) > guard:
                break

        if _norm(x) > guard:
            if store_rows:
                if n_rows >= rows_t.shape[0]:
                    rows_t = _grow_f1(rows_t)
                    rows_x = _grow_f2(rows_x)
                    rows_z = _grow_f2(rows_z)
                    rows_kind = _grow_i1(rows_kind)
                rows_t[n_rows] = t
                rows_x[n_rows] = x
                rows_z[n_rows] = z
                rows_kind[n_rows] = 3
                n_rows += 1
            return (STATUS_DIVERGED, t, x, z, rows_t, rows_x, rows_z, rows_kind, n_rows,
                    ev_t, ev_unit, n_ev)

        if store_rows:
            if n_rows >= rows_t.shape[0]:
                rows_t = _grow_f1(rows_t)
                rows_x = _grow_f2(rows_x)
                rows_z = _grow_f2(rows_z)
                rows_kind = _grow_i1(rows_kind)
            rows_t[n_rows] = t
            rows_x[n_rows] = x
            rows_z[n_rows] = z
            rows_kind[n_rows] = 0
            n_rows += 1

    return (STATUS_OK, t, x, z, rows_t, rows_x, rows_z, rows_kind, n_rows, ev_t, ev_unit, n_ev)
