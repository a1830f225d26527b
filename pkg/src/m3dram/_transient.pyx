# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernel for the lumped bitline ladder.

Mirror of m3dram._transient_py (same state layout, integration scheme and
event semantics); keep the two in sync. See that module for docs.
"""

import numpy as np

cdef int _RUN_DURATION = 0
cdef int _STOP_SPREAD = 1
cdef int _STOP_SENSE_ABOVE = 2
cdef int _STOP_CELL_ABOVE = 3
cdef int _STOP_MAXDEV = 4

RUN_DURATION = _RUN_DURATION
STOP_SPREAD = _STOP_SPREAD
STOP_SENSE_ABOVE = _STOP_SENSE_ABOVE
STOP_CELL_ABOVE = _STOP_CELL_ABOVE
STOP_MAXDEV = _STOP_MAXDEV

BACKEND = "compiled"


cdef inline void _deriv(
    double vc, double[::1] v, int n,
    int cell_attached, double c_cell, double[::1] cn, double[::1] rs,
    int latch_on, double gm, double vdd, double vmid,
    int eq_on, double r_eq, double r_fwd, double sat_v, double k_rev,
    double* dvc, double[::1] dv, double* dq,
) noexcept nogil:
    cdef int k, last = n - 1
    cdef double i_acc = 0.0, i_end = 0.0, j_prev, j_k, dvv, vn
    cdef double v_lim = 1.05 * vdd, head, gate

    if cell_attached:
        dvv = vc - v[0]
        if dvv >= 0.0:
            # discharge: ohmic on-path, saturation-limited at high drive
            i_acc = (dvv if dvv < sat_v else sat_v) / r_fwd
        else:
            # restore: square law in the follower headroom, throttled
            # linearly over the last 50 mV as the bitline meets the cell
            head = v_lim - vc
            if head > 0.0:
                gate = -dvv / 0.05
                if gate > 1.0:
                    gate = 1.0
                i_acc = -k_rev * head * head * gate
            else:
                i_acc = 0.0
    vn = v[last]
    if latch_on:
        if vn > vmid:
            if vn < vdd:
                i_end += gm * (vn - vmid) * (vdd - vn)
        elif vn > 0.0:
            i_end -= gm * (vmid - vn) * vn
    if eq_on:
        i_end += (vmid - vn) / r_eq

    j_prev = i_acc
    for k in range(last):
        j_k = (v[k] - v[k + 1]) / rs[k]
        dv[k] = (j_prev - j_k) / cn[k]
        j_prev = j_k
    dv[last] = (j_prev + i_end) / cn[last]
    dvc[0] = -i_acc / c_cell if cell_attached else 0.0
    dq[0] = i_end


cdef inline double _predicate(
    int mode, double threshold, double vc, double[::1] v, int n,
    int cell_attached, double vmid,
) noexcept nogil:
    cdef int j, last = n - 1
    cdef double lo, hi, dev, d
    if mode == _STOP_SPREAD:
        lo = v[0]
        hi = v[0]
        for j in range(1, n):
            if v[j] < lo:
                lo = v[j]
            if v[j] > hi:
                hi = v[j]
        if cell_attached:
            if vc < lo:
                lo = vc
            if vc > hi:
                hi = vc
        return threshold - (hi - lo)
    if mode == _STOP_SENSE_ABOVE:
        return v[last] - threshold
    if mode == _STOP_CELL_ABOVE:
        return vc - threshold
    if mode == _STOP_MAXDEV:
        dev = 0.0
        for j in range(n):
            d = v[j] - vmid
            if d < 0.0:
                d = -d
            if d > dev:
                dev = d
        return threshold - dev
    return -1.0


def integrate_ladder(
    double[::1] state,
    double c_cell,
    double[::1] c_nodes,
    double[::1] r_series,
    int cell_attached,
    double r_fwd,
    double sat_v,
    double k_rev,
    int latch_on,
    double gm,
    double vdd,
    double vmid,
    int eq_on,
    double r_eq,
    double dt,
    long max_steps,
    int mode,
    double threshold,
    double t0,
    long sample_every,
    out_t,
    out_vsense,
    out_vcell,
):
    cdef int n = c_nodes.shape[0]
    cdef int last = n - 1
    cdef int i
    cdef long step
    cdef double vc = state[0]
    cdef double q = state[n + 1]

    buf = np.empty((6, n), dtype=np.float64)
    varr = np.empty(n, dtype=np.float64)
    cdef double[::1] v = varr
    for i in range(n):
        v[i] = state[1 + i]
    cdef double[::1] k1 = buf[0]
    cdef double[::1] k2 = buf[1]
    cdef double[::1] k3 = buf[2]
    cdef double[::1] k4 = buf[3]
    cdef double[::1] vtmp = buf[4]

    cdef double k1c = 0.0, k2c = 0.0, k3c = 0.0, k4c = 0.0
    cdef double e1 = 0.0, e2 = 0.0, e3 = 0.0, e4 = 0.0
    cdef double half = dt * 0.5
    cdef double sixth = dt / 6.0
    cdef double t, frac, prev_sense, prev_cell

    if sample_every > 0:
        out_t.append(t0)
        out_vsense.append(v[last])
        out_vcell.append(vc)

    if mode != _RUN_DURATION and _predicate(
        mode, threshold, vc, v, n, cell_attached, vmid
    ) >= 0.0:
        state[0] = vc
        for i in range(n):
            state[1 + i] = v[i]
        state[n + 1] = q
        return True, t0, 0

    for step in range(1, max_steps + 1):
        prev_sense = v[last]
        prev_cell = vc

        _deriv(vc, v, n, cell_attached, c_cell, c_nodes, r_series,
               latch_on, gm, vdd, vmid, eq_on, r_eq, r_fwd, sat_v, k_rev,
               &k1c, k1, &e1)
        for i in range(n):
            vtmp[i] = v[i] + half * k1[i]
        _deriv(vc + half * k1c, vtmp, n, cell_attached, c_cell, c_nodes,
               r_series, latch_on, gm, vdd, vmid, eq_on, r_eq, r_fwd, sat_v, k_rev,
               &k2c, k2, &e2)
        for i in range(n):
            vtmp[i] = v[i] + half * k2[i]
        _deriv(vc + half * k2c, vtmp, n, cell_attached, c_cell, c_nodes,
               r_series, latch_on, gm, vdd, vmid, eq_on, r_eq, r_fwd, sat_v, k_rev,
               &k3c, k3, &e3)
        for i in range(n):
            vtmp[i] = v[i] + dt * k3[i]
        _deriv(vc + dt * k3c, vtmp, n, cell_attached, c_cell, c_nodes,
               r_series, latch_on, gm, vdd, vmid, eq_on, r_eq, r_fwd, sat_v, k_rev,
               &k4c, k4, &e4)

        for i in range(n):
            v[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
        vc += sixth * (k1c + 2.0 * (k2c + k3c) + k4c)
        q += sixth * (e1 + 2.0 * (e2 + e3) + e4)
        t = t0 + step * dt

        if sample_every > 0 and step % sample_every == 0:
            out_t.append(t)
            out_vsense.append(v[last])
            out_vcell.append(vc)

        if mode == _STOP_SENSE_ABOVE:
            if v[last] >= threshold:
                frac = 1.0
                if v[last] > prev_sense:
                    frac = (threshold - prev_sense) / (v[last] - prev_sense)
                    if frac < 0.0:
                        frac = 0.0
                state[0] = vc
                for i in range(n):
                    state[1 + i] = v[i]
                state[n + 1] = q
                return True, t - dt + frac * dt, step
        elif mode == _STOP_CELL_ABOVE:
            if vc >= threshold:
                frac = 1.0
                if vc > prev_cell:
                    frac = (threshold - prev_cell) / (vc - prev_cell)
                    if frac < 0.0:
                        frac = 0.0
                state[0] = vc
                for i in range(n):
                    state[1 + i] = v[i]
                state[n + 1] = q
                return True, t - dt + frac * dt, step
        elif mode != _RUN_DURATION:
            if _predicate(mode, threshold, vc, v, n, cell_attached, vmid) >= 0.0:
                state[0] = vc
                for i in range(n):
                    state[1 + i] = v[i]
                state[n + 1] = q
                return True, t, step

    state[0] = vc
    for i in range(n):
        state[1 + i] = v[i]
    state[n + 1] = q
    return (mode == _RUN_DURATION), t0 + max_steps * dt, max_steps
