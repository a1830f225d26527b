"""Fits the free circuit constants to measured reference timings.

The reference leaves four sense-amp/cell constants and the restore drive
unspecified; this module fits them by coordinate descent over a
multiplicative grid (deterministic: fixed parameter order, fixed grids)
so the simulated tRCD/tRP/tRC of every reference organization lands
within tolerance.
"""

import json
from dataclasses import dataclass, replace

from .circuit import (
    BitlineElectricals,
    CellModel,
    SenseAmpModel,
    SolverConfig,
    simulate_activation,
    simulate_precharge,
)
from .errors import CalibrationFailure, NonConvergence
from .geometry import OrgSpec, TechNode

TIMING_TOLERANCE = 0.10  # required relative accuracy on reference tRCD/tRP

# objective weights; tRC is a derived span and gets a softer pull
W_RCD = 1.0
W_RP = 1.0
W_RC = 0.7

# coordinate-descent schedule: (grid half-width as a factor, points)
SEARCH_STAGES = ((1.8, 9), (1.25, 7), (1.08, 5))
SWEEPS_PER_STAGE = 2


@dataclass(frozen=True)
class ReferenceTiming:
    """Measured timing row for one organization (ns units)."""

    org: str
    cells_per_bitline: int
    is_m3d: bool
    t_rcd_ns: float | None = None
    t_cas_ns: float | None = None
    t_rp_ns: float | None = None
    t_rc_ns: float | None = None
    t_faw_ns: float | None = None
    e_activate_nj: float | None = None
    e_read_nj: float | None = None
    e_write_nj: float | None = None
    e_refresh_nj: float | None = None

    def usable_for_circuit_fit(self) -> bool:
        return self.t_rcd_ns is not None and self.t_rp_ns is not None


@dataclass
class CircuitCalibration:
    cell: CellModel
    sense_amp: SenseAmpModel
    residuals: dict
    objective: float
    underdetermined: bool = False

    def worst_residual(self) -> tuple[str, str, float]:
        worst = ("", "", 0.0)
        for org, errs in self.residuals.items():
            for key, err in errs.items():
                if abs(err) > abs(worst[2]):
                    worst = (org, key, err)
        return worst


def _simulate_row(row: ReferenceTiming, cell: CellModel, sa: SenseAmpModel,
                  tech: TechNode, cfg: SolverConfig) -> dict:
    spec = OrgSpec(row.org, row.cells_per_bitline, row.is_m3d)
    bl = BitlineElectricals.from_org(spec)
    act = simulate_activation(cell, bl, sa, tech, cfg, org=row.org)
    t_rp = simulate_precharge(cell, bl, sa, tech, cfg, org=row.org)
    return {
        "t_rcd_ns": act.t_rcd_s * 1e9,
        "t_rp_ns": t_rp * 1e9,
        "t_rc_ns": (act.t_ras_s + t_rp) * 1e9,
    }


def _residuals(rows, cell, sa, tech, cfg) -> dict:
    out = {}
    for row in rows:
        sim = _simulate_row(row, cell, sa, tech, cfg)
        errs = {}
        if row.t_rcd_ns:
            errs["t_rcd"] = sim["t_rcd_ns"] / row.t_rcd_ns - 1.0
        if row.t_rp_ns:
            errs["t_rp"] = sim["t_rp_ns"] / row.t_rp_ns - 1.0
        if row.t_rc_ns:
            errs["t_rc"] = sim["t_rc_ns"] / row.t_rc_ns - 1.0
        out[row.org] = errs
    return out


def _objective(rows, cell, sa, tech, cfg) -> float:
    try:
        res = _residuals(rows, cell, sa, tech, cfg)
    except NonConvergence:
        return 1e9
    total = 0.0
    for errs in res.values():
        total += W_RCD * errs.get("t_rcd", 0.0) ** 2
        total += W_RP * errs.get("t_rp", 0.0) ** 2
        total += W_RC * errs.get("t_rc", 0.0) ** 2
    return total


# (name, getter, setter) for the five fitted constants
def _get_params(cell: CellModel, sa: SenseAmpModel):
    return {
        "latch_transconductance": sa.latch_transconductance,
        "intrinsic_enable_delay": sa.intrinsic_enable_delay,
        "access_on_resistance": cell.access_on_resistance_ohm,
        "equalizer_resistance": sa.precharge_equalizer_resistance,
        "restore_follower_coeff": cell.restore_follower_coeff,
    }


def _apply_params(cell: CellModel, sa: SenseAmpModel, params: dict):
    cell = replace(
        cell,
        access_on_resistance_ohm=params["access_on_resistance"],
        restore_follower_coeff=params["restore_follower_coeff"],
    )
    sa = replace(
        sa,
        latch_transconductance=params["latch_transconductance"],
        intrinsic_enable_delay=params["intrinsic_enable_delay"],
        precharge_equalizer_resistance=params["equalizer_resistance"],
    )
    return cell, sa


def calibrate_circuit(rows: list, tech: TechNode = TechNode(),
                      cfg: SolverConfig = SolverConfig(),
                      cell: CellModel = CellModel(),
                      sense_amp: SenseAmpModel = SenseAmpModel(),
                      strict: bool = True) -> CircuitCalibration:
    """Fit the five free circuit constants to the reference timing rows.

    Rows missing either tRCD or tRP are held out of the fit (they remain
    available as held-out checks). With fewer than two usable rows the fit
    is underdetermined and the defaults are returned flagged as such.
    """
    fit_rows = [r for r in rows if r.usable_for_circuit_fit()]
    if len(fit_rows) < 2:
        residuals = _residuals(fit_rows, cell, sense_amp, tech, cfg)
        return CircuitCalibration(
            cell=cell, sense_amp=sense_amp, residuals=residuals,
            objective=_objective(fit_rows, cell, sense_amp, tech, cfg),
            underdetermined=True,
        )

    params = _get_params(cell, sense_amp)
    order = list(params)
    cache: dict = {}

    def evaluate(p: dict) -> float:
        key = tuple(round(v, 14) for v in p.values())
        if key not in cache:
            c, s = _apply_params(cell, sense_amp, p)
            cache[key] = _objective(fit_rows, c, s, tech, cfg)
        return cache[key]

    best = evaluate(params)
    for width, points in SEARCH_STAGES:
        for _ in range(SWEEPS_PER_STAGE):
            for name in order:
                center = params[name]
                candidates = [
                    center * width ** (2.0 * i / (points - 1) - 1.0)
                    for i in range(points)
                ]
                for cand in candidates:
                    trial = dict(params)
                    trial[name] = cand
                    val = evaluate(trial)
                    if val < best - 1e-15:
                        best = val
                        params = trial

    cell_fit, sa_fit = _apply_params(cell, sense_amp, params)
    residuals = _residuals(rows, cell_fit, sa_fit, tech, cfg)

    calib = CircuitCalibration(
        cell=cell_fit, sense_amp=sa_fit, residuals=residuals, objective=best,
    )
    if strict:
        worst_fit = ("", "", 0.0)
        for row in fit_rows:
            for key in ("t_rcd", "t_rp"):
                err = residuals[row.org].get(key, 0.0)
                if abs(err) > abs(worst_fit[2]):
                    worst_fit = (row.org, key, err)
        if abs(worst_fit[2]) > TIMING_TOLERANCE:
            raise CalibrationFailure(
                f"calibration residual {worst_fit[2]:+.1%} on "
                f"{worst_fit[0]}/{worst_fit[1]} exceeds "
                f"{TIMING_TOLERANCE:.0%}",
                worst_row=worst_fit,
            )
    return calib


def circuit_calibration_to_dict(calib: CircuitCalibration) -> dict:
    return {
        "cell": {
            "c_cell_f": calib.cell.c_cell_f,
            "access_on_resistance_ohm": calib.cell.access_on_resistance_ohm,
            "top_tier_current_derating": calib.cell.top_tier_current_derating,
            "restore_follower_coeff": calib.cell.restore_follower_coeff,
        },
        "sense_amp": {
            "latch_transconductance": calib.sense_amp.latch_transconductance,
            "threshold_voltage": calib.sense_amp.threshold_voltage,
            "precharge_equalizer_resistance":
                calib.sense_amp.precharge_equalizer_resistance,
            "intrinsic_enable_delay": calib.sense_amp.intrinsic_enable_delay,
        },
        "residuals": calib.residuals,
        "objective": calib.objective,
        "underdetermined": calib.underdetermined,
    }


def circuit_calibration_from_dict(d: dict) -> CircuitCalibration:
    return CircuitCalibration(
        cell=CellModel(
            c_cell_f=d["cell"]["c_cell_f"],
            access_on_resistance_ohm=d["cell"]["access_on_resistance_ohm"],
            top_tier_current_derating=d["cell"]["top_tier_current_derating"],
            restore_follower_coeff=d["cell"]["restore_follower_coeff"],
        ),
        sense_amp=SenseAmpModel(
            latch_transconductance=d["sense_amp"]["latch_transconductance"],
            threshold_voltage=d["sense_amp"]["threshold_voltage"],
            precharge_equalizer_resistance=
                d["sense_amp"]["precharge_equalizer_resistance"],
            intrinsic_enable_delay=d["sense_amp"]["intrinsic_enable_delay"],
        ),
        residuals=d.get("residuals", {}),
        objective=d.get("objective", 0.0),
        underdetermined=d.get("underdetermined", False),
    )


def save_calibration(path: str, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_calibration(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)
