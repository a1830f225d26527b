"""Local-bitline transient simulation: precharge, charge share, sense, restore.

The bitline is an N-segment pi-ladder (distributed R/C). The cell hangs off
the far end through its access transistor; the sense-amp latch, precharge
equalizer and (for M3D stacks) the inter-tier via load sit at the near end.

Model choices worth knowing about:
  * The access transistor is direction-dependent. Discharging the cell onto
    the bitline sees the ohmic on-path, current-limited at high drive
    (saturation); top-tier degradation in M3D stacks derates that
    saturation current, which matches the observation that tier
    degradation barely moves the extracted timings. Restoring the cell
    toward VDD runs the device as a source follower near cutoff, a square
    law in the remaining headroom (i = k * (v_lim - v_cell)^2, throttled
    as the bitline meets the cell); the follower drive is set by the
    boosted wordline overdrive and is tier-independent.
  * The latch injects gm * (V - VDD/2) * (VDD - V): square-law in the two
    node swings, zero at both rails, so amplification is logistic-shaped.
  * The latch (and the equalizer) turn on a fixed intrinsic delay after
    charge sharing has settled; that delay is the floor under t_rcd, and a
    fixed wordline ramp margin floors the settle time itself.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import backend
from .errors import InvalidConfig, NonConvergence
from .geometry import OrgSpec, TechNode

# Per-cell bitline parasitics at 22 nm (512 cells -> 20 kOhm / 72 fF).
R_PER_CELL_OHM = 20000.0 / 512.0
C_PER_CELL_F = 72e-15 / 512.0

# Inter-tier via parasitics; the worst-case stack applies to the SA I/O
# to global-bitline route (tCAS side) and is carried for reporting.
MIV_R_OHM = 10.0
MIV_C_F = 0.2e-15
WORST_VERTICAL_R_OHM = 20.0
WORST_VERTICAL_C_F = 0.23e-15

# Wordline ramp margin: charge-share settling cannot be declared before
# this much time has passed, which floors the enable time of very short
# (fast-settling) bitlines.
WORDLINE_RAMP_S = 1.7e-9

# Drive above which the access transistor saturates (read direction).
ACCESS_SAT_DRIVE_V = 0.45


@dataclass(frozen=True)
class BitlineElectricals:
    """Lumped local-bitline parasitics for one organization."""

    r_total_ohm: float
    c_total_f: float
    r_per_cell_ohm: float = R_PER_CELL_OHM
    c_per_cell_f: float = C_PER_CELL_F
    miv_r_ohm: float = 0.0
    miv_c_f: float = 0.0
    worst_vertical_r_ohm: float = WORST_VERTICAL_R_OHM
    worst_vertical_c_f: float = WORST_VERTICAL_C_F
    is_m3d: bool = False

    @classmethod
    def from_org(cls, spec: OrgSpec) -> "BitlineElectricals":
        cells = spec.cells_per_bitline
        miv_r = MIV_R_OHM if spec.is_m3d else 0.0
        miv_c = MIV_C_F if spec.is_m3d else 0.0
        return cls(
            r_total_ohm=cells * R_PER_CELL_OHM + miv_r,
            c_total_f=cells * C_PER_CELL_F + miv_c,
            miv_r_ohm=miv_r,
            miv_c_f=miv_c,
            is_m3d=spec.is_m3d,
        )


@dataclass(frozen=True)
class CellModel:
    """Storage cell and its access transistor."""

    c_cell_f: float = 24e-15
    access_on_resistance_ohm: float = 22000.0
    top_tier_current_derating: float = 0.85
    restore_follower_coeff: float = 1.5e-5  # A/V^2, cell-restore square law

    def __post_init__(self):
        if not 0.0 < self.top_tier_current_derating <= 1.0:
            raise InvalidConfig("top_tier_current_derating must be in (0, 1]")

    def r_forward(self) -> float:
        return self.access_on_resistance_ohm

    def sat_drive_v(self, is_m3d: bool) -> float:
        """Saturation drive; the saturated current is derated on the top
        tier (the degradation hits the drive current, not the triode
        conductance)."""
        v = ACCESS_SAT_DRIVE_V
        return v * self.top_tier_current_derating if is_m3d else v

    def k_restore(self) -> float:
        return self.restore_follower_coeff


@dataclass(frozen=True)
class SenseAmpModel:
    """Cross-coupled latch, its enable sequencing, and the precharge unit."""

    latch_transconductance: float = 1.1e-4     # A/V^2
    threshold_voltage: float = 0.05            # V, minimum sensable swing
    precharge_equalizer_resistance: float = 13.5e3
    intrinsic_enable_delay: float = 2.5e-9     # s, also floors t_rcd

    def __post_init__(self):
        if min(
            self.latch_transconductance,
            self.threshold_voltage,
            self.precharge_equalizer_resistance,
            self.intrinsic_enable_delay,
        ) <= 0.0:
            raise InvalidConfig("sense-amp parameters must all be positive")


@dataclass(frozen=True)
class SolverConfig:
    dt_s: float = 10e-12          # requested cap; stability may shrink it
    horizon_s: float = 100e-9
    n_segments: int = 8
    settle_tol_v: float = 1.5e-3
    precharge_tol_frac: float = 0.01  # of the 0.5*VDD target
    sample_every: int = 0             # waveform stride; 0 = no waveform

    def __post_init__(self):
        if self.dt_s <= 0.0:
            raise InvalidConfig("solver step must be positive")
        if self.horizon_s <= 0.0 or self.n_segments < 1:
            raise InvalidConfig("bad solver horizon or segment count")


@dataclass
class TransientResult:
    org: str
    delta_v: float
    t_rcd_s: float
    t_ras_s: float
    t_rp_s: float | None
    t_settle_s: float
    t_enable_s: float
    v_plateau: float
    charge_balance_err: float
    dt_used_s: float
    waveform: list = field(default_factory=list)  # (t_s, v_sense, v_cell)


def charge_share_delta(cell: CellModel, bl: BitlineElectricals,
                       tech: TechNode = TechNode()) -> float:
    """Charge-conservation perturbation of the precharged bitline.

    Sharing a full cell (VDD) with a half-VDD bitline leaves both at
    VDD/2 + delta with delta = (VDD/2) * Cc / (Cc + Cbl).
    """
    cc = cell.c_cell_f
    cbl = bl.c_total_f
    if cc < 0.0 or cbl < 0.0:
        raise InvalidConfig("capacitances must be non-negative")
    if cc == 0.0:
        return 0.0
    return 0.5 * tech.vdd * cc / (cc + cbl)


def _ladder_arrays(bl: BitlineElectricals, n_segments: int):
    """Pi-ladder node capacitances and series resistances.

    The via load (M3D) is appended at the sense end: its resistance joins
    the last series element and its capacitance the last node, so the
    totals still obey r_total = cells * r_per_cell + miv_r.
    """
    n = n_segments
    r_line = bl.r_total_ohm - bl.miv_r_ohm
    c_line = bl.c_total_f - bl.miv_c_f
    r_seg = r_line / n
    c_seg = c_line / n
    c_nodes = np.full(n + 1, c_seg, dtype=np.float64)
    c_nodes[0] = c_seg / 2.0
    c_nodes[n] = c_seg / 2.0 + bl.miv_c_f
    r_series = np.full(n, r_seg, dtype=np.float64)
    r_series[n - 1] += bl.miv_r_ohm
    return c_nodes, r_series


def _stable_dt(c_nodes, r_series, c_cell, g_cell_max, r_eq, gm, vdd,
               cell_attached: bool) -> float:
    """Explicit-RK4 stability bound for the ladder (Gershgorin estimate)."""
    n = len(c_nodes)
    g_node = np.zeros(n)
    g_node[0] += 1.0 / r_series[0]
    for k in range(1, n - 1):
        g_node[k] += 1.0 / r_series[k - 1] + 1.0 / r_series[k]
    g_node[n - 1] += 1.0 / r_series[n - 2] if n > 1 else 0.0
    g_node[n - 1] += 1.0 / r_eq + gm * vdd
    rate = 2.0 * max(g_node / c_nodes)
    if cell_attached:
        rate = max(rate, 2.0 * g_cell_max / min(c_cell, c_nodes[0]))
    return 2.5 / rate


def _effective_dt(cfg: SolverConfig, bl: BitlineElectricals, cell: CellModel,
                  sa: SenseAmpModel, tech: TechNode, cell_attached: bool) -> float:
    c_nodes, r_series = _ladder_arrays(bl, cfg.n_segments)
    g_cell = max(1.0 / cell.r_forward(), 2.0 * cell.restore_follower_coeff * tech.vdd)
    bound = _stable_dt(
        c_nodes, r_series, cell.c_cell_f, g_cell,
        sa.precharge_equalizer_resistance,
        sa.latch_transconductance, tech.vdd, cell_attached,
    )
    return min(cfg.dt_s, bound)


def _total_charge(state, c_cell, c_nodes, cell_attached):
    q = float(np.dot(state[1:len(c_nodes) + 1], c_nodes))
    if cell_attached:
        q += state[0] * c_cell
    return q


def simulate_activation(cell: CellModel, bl: BitlineElectricals,
                        sa: SenseAmpModel, tech: TechNode = TechNode(),
                        cfg: SolverConfig = SolverConfig(),
                        org: str = "") -> TransientResult:
    """Worst-case read-'1' activation: extract t_rcd, t_ras and delta_v.

    Sequence: wordline asserts at t=0 with the bitline precharged to
    VDD/2 and the cell at VDD; charge sharing settles; after the intrinsic
    enable delay the latch amplifies. t_rcd is the first instant at or
    after latch enable with the sense node at 0.75*VDD; t_ras is when the
    cell recovers to 0.95*VDD.
    """
    vdd = tech.vdd
    vmid = 0.5 * vdd
    c_nodes, r_series = _ladder_arrays(bl, cfg.n_segments)
    dt = _effective_dt(cfg, bl, cell, sa, tech, cell_attached=True)
    r_fwd = cell.r_forward()
    sat_v = cell.sat_drive_v(bl.is_m3d)
    k_rev = cell.k_restore()
    gm = sa.latch_transconductance
    n = len(c_nodes)

    state = np.empty(n + 2, dtype=np.float64)
    state[0] = vdd
    state[1:n + 1] = vmid
    state[n + 1] = 0.0
    q0 = _total_charge(state, cell.c_cell_f, c_nodes, True)

    wav_t: list = []
    wav_vs: list = []
    wav_vc: list = []

    def run(latch_on, mode, threshold, steps, t0):
        return backend.integrate_ladder(
            state, cell.c_cell_f, c_nodes, r_series, 1, r_fwd, sat_v, k_rev,
            1 if latch_on else 0, gm, vdd, vmid, 0, sa.precharge_equalizer_resistance,
            dt, steps, mode, threshold, t0, cfg.sample_every,
            wav_t, wav_vs, wav_vc,
        )

    # wordline ramp margin: integrate blind before watching for settle
    ramp_steps = max(1, round(WORDLINE_RAMP_S / dt))
    _, t, _ = run(False, backend.RUN_DURATION, 0.0, ramp_steps, 0.0)

    budget = max(1, math.ceil((cfg.horizon_s - t) / dt))
    hit, t_settle, _ = run(False, backend.STOP_SPREAD, cfg.settle_tol_v, budget, t)
    if not hit:
        raise NonConvergence(
            f"charge share never settled within {cfg.horizon_s * 1e9:.0f} ns "
            f"(org={org or 'unnamed'})"
        )

    delay_steps = max(1, round(sa.intrinsic_enable_delay / dt))
    _, t_enable, _ = run(False, backend.RUN_DURATION, 0.0, delay_steps, t_settle)

    v_plateau = float(state[n])
    delta_v = v_plateau - vmid
    if delta_v < sa.threshold_voltage:
        raise NonConvergence(
            f"charge-share swing {delta_v * 1e3:.1f} mV is below the "
            f"{sa.threshold_voltage * 1e3:.0f} mV sense threshold"
        )

    budget = max(1, math.ceil((cfg.horizon_s - t_enable) / dt))
    hit, t_rcd, steps = run(True, backend.STOP_SENSE_ABOVE, 0.75 * vdd, budget,
                            t_enable)
    if not hit:
        raise NonConvergence(
            f"bitline never crossed 0.75*VDD within {cfg.horizon_s * 1e9:.0f} ns "
            f"(org={org or 'unnamed'})"
        )

    # the state sits at the end of the step containing the crossing
    t_now = t_enable + steps * dt
    budget = max(1, math.ceil((cfg.horizon_s - t_now) / dt))
    hit, t_ras, _ = run(True, backend.STOP_CELL_ABOVE, 0.95 * vdd, budget, t_now)
    if not hit:
        raise NonConvergence(
            f"cell never restored to 0.95*VDD within {cfg.horizon_s * 1e9:.0f} ns "
            f"(org={org or 'unnamed'})"
        )

    q_caps = _total_charge(state, cell.c_cell_f, c_nodes, True) - q0
    q_ext = float(state[n + 1])
    denom = max(abs(q_ext), abs(q_caps), 1e-30)
    charge_err = abs(q_ext - q_caps) / denom

    return TransientResult(
        org=org,
        delta_v=delta_v,
        t_rcd_s=t_rcd,
        t_ras_s=t_ras,
        t_rp_s=None,
        t_settle_s=t_settle,
        t_enable_s=t_enable,
        v_plateau=v_plateau,
        charge_balance_err=charge_err,
        dt_used_s=dt,
        waveform=list(zip(wav_t, wav_vs, wav_vc)),
    )


def simulate_precharge(cell: CellModel, bl: BitlineElectricals,
                       sa: SenseAmpModel, tech: TechNode = TechNode(),
                       cfg: SolverConfig = SolverConfig(),
                       org: str = "") -> float:
    """Post-activation precharge: bitline at VDD back to within 1% of VDD/2.

    The PRE command decouples the cell, then (after the same intrinsic
    enable delay) the equalizer drags the line to VDD/2 through its
    resistance. Returns t_rp in seconds.
    """
    vdd = tech.vdd
    vmid = 0.5 * vdd
    c_nodes, r_series = _ladder_arrays(bl, cfg.n_segments)
    dt = _effective_dt(cfg, bl, cell, sa, tech, cell_attached=False)
    n = len(c_nodes)

    state = np.empty(n + 2, dtype=np.float64)
    state[0] = 0.0  # cell decoupled; value unused
    state[1:n + 1] = vdd
    state[n + 1] = 0.0

    # dead time before the equalizer engages: nothing moves, just advance
    delay_steps = max(1, round(sa.intrinsic_enable_delay / dt))
    t0 = delay_steps * dt

    budget = max(1, math.ceil((cfg.horizon_s - t0) / dt))
    hit, t_rp, _ = backend.integrate_ladder(
        state, cell.c_cell_f, c_nodes, r_series, 0,
        cell.r_forward(), cell.sat_drive_v(bl.is_m3d), cell.k_restore(),
        0, sa.latch_transconductance, vdd, vmid,
        1, sa.precharge_equalizer_resistance,
        dt, budget, backend.STOP_MAXDEV, cfg.precharge_tol_frac * vmid, t0,
        0, [], [], [],
    )
    if not hit:
        raise NonConvergence(
            f"bitline never precharged to VDD/2 within {cfg.horizon_s * 1e9:.0f} ns "
            f"(org={org or 'unnamed'})"
        )
    return t_rp


def with_extra_parasitics(bl: BitlineElectricals, extra_r: float,
                          extra_c: float) -> BitlineElectricals:
    """Bitline with additional series R / shunt C at the sense end."""
    return replace(
        bl,
        r_total_ohm=bl.r_total_ohm + extra_r,
        c_total_f=bl.c_total_f + extra_c,
        miv_r_ohm=bl.miv_r_ohm + extra_r,
        miv_c_f=bl.miv_c_f + extra_c,
    )
