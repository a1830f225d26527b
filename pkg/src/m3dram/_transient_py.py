"""Pure-Python RK4 kernel for the lumped bitline ladder.

Fallback selected at import time when the compiled extension
(m3dram._transient) is unavailable. Must match the compiled kernel's
integration scheme and event semantics exactly; keep the two in sync.

State layout: [v_cell, v_node_0 .. v_node_{n-1}, q_external]
  node 0      far (cell) end of the local bitline
  node n-1    sense-amp end (latch, equalizer, inter-tier via load)
  q_external  integral of latch + equalizer current, for charge audits
"""

# stop-predicate modes
RUN_DURATION = 0      # run max_steps, no event
STOP_SPREAD = 1       # spread over cell+nodes < threshold
STOP_SENSE_ABOVE = 2  # sense-node voltage >= threshold (interpolated)
STOP_CELL_ABOVE = 3   # cell voltage >= threshold (interpolated)
STOP_MAXDEV = 4       # max |v_node - vmid| <= threshold, nodes only

BACKEND = "python"


def integrate_ladder(
    state,
    c_cell,
    c_nodes,
    r_series,
    cell_attached,
    r_fwd,
    sat_v,
    k_rev,
    latch_on,
    gm,
    vdd,
    vmid,
    eq_on,
    r_eq,
    dt,
    max_steps,
    mode,
    threshold,
    t0,
    sample_every,
    out_t,
    out_vsense,
    out_vcell,
):
    """Advance the ladder until the stop predicate fires or the budget ends.

    `state` (numpy float64 array) is mutated to the final state. Returns
    (hit, t_event, steps_taken); `hit` is False when the step budget ran
    out first. Crossing events are linearly interpolated inside the step.
    """
    n = len(c_nodes)
    vc = float(state[0])
    v = [float(state[1 + i]) for i in range(n)]
    q = float(state[n + 1])
    cn = [float(x) for x in c_nodes]
    rs = [float(x) for x in r_series]
    last = n - 1

    v_lim = 1.05 * vdd  # source-follower cutoff: boosted gate minus threshold

    def deriv(vc_, v_):
        if cell_attached:
            dvv = vc_ - v_[0]
            if dvv >= 0.0:
                # discharge: ohmic on-path, saturation-limited at high drive
                i_acc = (dvv if dvv < sat_v else sat_v) / r_fwd
            else:
                # restore: square law in the follower headroom, throttled
                # linearly over the last 50 mV as the bitline meets the cell
                head = v_lim - vc_
                if head > 0.0:
                    gate = -dvv / 0.05
                    if gate > 1.0:
                        gate = 1.0
                    i_acc = -k_rev * head * head * gate
                else:
                    i_acc = 0.0
        else:
            i_acc = 0.0
        i_end = 0.0
        vn = v_[last]
        if latch_on:
            if vn > vmid:
                if vn < vdd:
                    i_end += gm * (vn - vmid) * (vdd - vn)
            elif vn > 0.0:
                i_end -= gm * (vmid - vn) * vn
        if eq_on:
            i_end += (vmid - vn) / r_eq
        dv = [0.0] * n
        j_prev = i_acc
        for k in range(last):
            j_k = (v_[k] - v_[k + 1]) / rs[k]
            dv[k] = (j_prev - j_k) / cn[k]
            j_prev = j_k
        dv[last] = (j_prev + i_end) / cn[last]
        dvc = -i_acc / c_cell if cell_attached else 0.0
        return dvc, dv, i_end

    def predicate_value():
        # Scalar whose sign change marks the event, per mode.
        if mode == STOP_SPREAD:
            lo = min(v)
            hi = max(v)
            if cell_attached:
                lo = min(lo, vc)
                hi = max(hi, vc)
            return threshold - (hi - lo)
        if mode == STOP_SENSE_ABOVE:
            return v[last] - threshold
        if mode == STOP_CELL_ABOVE:
            return vc - threshold
        if mode == STOP_MAXDEV:
            dev = 0.0
            for x in v:
                d = x - vmid
                if d < 0.0:
                    d = -d
                if d > dev:
                    dev = d
            return threshold - dev
        return -1.0

    def writeback():
        state[0] = vc
        for i in range(n):
            state[1 + i] = v[i]
        state[n + 1] = q

    if sample_every > 0:
        out_t.append(t0)
        out_vsense.append(v[last])
        out_vcell.append(vc)

    if mode != RUN_DURATION and predicate_value() >= 0.0:
        writeback()
        return True, t0, 0

    half = dt * 0.5
    sixth = dt / 6.0
    for step in range(1, max_steps + 1):
        prev_sense = v[last]
        prev_cell = vc

        k1c, k1, e1 = deriv(vc, v)
        v2 = [v[i] + half * k1[i] for i in range(n)]
        k2c, k2, e2 = deriv(vc + half * k1c, v2)
        v3 = [v[i] + half * k2[i] for i in range(n)]
        k3c, k3, e3 = deriv(vc + half * k2c, v3)
        v4 = [v[i] + dt * k3[i] for i in range(n)]
        k4c, k4, e4 = deriv(vc + dt * k3c, v4)

        for i in range(n):
            v[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
        vc += sixth * (k1c + 2.0 * (k2c + k3c) + k4c)
        q += sixth * (e1 + 2.0 * (e2 + e3) + e4)
        t = t0 + step * dt

        if sample_every > 0 and step % sample_every == 0:
            out_t.append(t)
            out_vsense.append(v[last])
            out_vcell.append(vc)

        if mode == STOP_SENSE_ABOVE:
            if v[last] >= threshold:
                frac = 1.0
                if v[last] > prev_sense:
                    frac = (threshold - prev_sense) / (v[last] - prev_sense)
                    if frac < 0.0:
                        frac = 0.0
                writeback()
                return True, t - dt + frac * dt, step
        elif mode == STOP_CELL_ABOVE:
            if vc >= threshold:
                frac = 1.0
                if vc > prev_cell:
                    frac = (threshold - prev_cell) / (vc - prev_cell)
                    if frac < 0.0:
                        frac = 0.0
                writeback()
                return True, t - dt + frac * dt, step
        elif mode != RUN_DURATION:
            if predicate_value() >= 0.0:
                writeback()
                return True, t, step

    writeback()
    return (mode == RUN_DURATION), t0 + max_steps * dt, max_steps
