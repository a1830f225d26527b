"""End-to-end derivation: organization spec -> geometry, timing, energy.

A CalibrationBundle carries everything fitted from the reference
measurements (circuit constants, the tCAS-versus-length model, energy
coefficients, and the four-activate-window anchor). The packaged default
bundle reproduces the shipped reference file; `calibrate_all` rebuilds it
from any reference.
"""

import json
from dataclasses import dataclass, replace

from .calibration import (
    CircuitCalibration,
    calibrate_circuit,
    circuit_calibration_from_dict,
    circuit_calibration_to_dict,
)
from .circuit import (
    BitlineElectricals,
    SolverConfig,
    TransientResult,
    simulate_activation,
    simulate_precharge,
)
from .config import data_path, load_orgs
from .energy import EnergyModel, EnergyParams, fit_energy_model
from .errors import InvalidConfig
from .geometry import GeometryReport, OrgSpec, TechNode, compute_areas
from .timing import FawAnchor, TcasModel, TimingParams, assemble_timing, fit_tcas_model

DEFAULT_CALIBRATION_FILE = "default_calibration.json"


@dataclass
class CalibrationBundle:
    circuit: CircuitCalibration
    tcas: TcasModel
    energy_model: EnergyModel
    faw_anchor: FawAnchor

    def to_dict(self) -> dict:
        return {
            "circuit": circuit_calibration_to_dict(self.circuit),
            "tcas": {
                "coeffs": list(self.tcas.coeffs),
                "residuals_ns": list(self.tcas.residuals_ns),
                "kind": self.tcas.kind,
            },
            "energy": self.energy_model.as_dict(),
            "faw_anchor": {
                "t_faw_ns": self.faw_anchor.t_faw_ns,
                "e_activate_nj": self.faw_anchor.e_activate_nj,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationBundle":
        return cls(
            circuit=circuit_calibration_from_dict(d["circuit"]),
            tcas=TcasModel(tuple(d["tcas"]["coeffs"]),
                           tuple(d["tcas"]["residuals_ns"]),
                           d["tcas"]["kind"]),
            energy_model=EnergyModel.from_dict(d["energy"]),
            faw_anchor=FawAnchor(**d["faw_anchor"]),
        )


def calibrate_all(reference_rows, tech: TechNode = TechNode(),
                  solver_cfg: SolverConfig = SolverConfig(),
                  exclude: tuple = ()) -> tuple:
    """Fit circuit, tCAS and energy models from the reference rows.

    `exclude` drops organizations from every fit (leave-one-out studies);
    excluded rows still get held-out predictions in the report. Returns
    (CalibrationBundle, report dict).
    """
    rows = [r for r in reference_rows if r.org not in exclude]
    if not rows:
        raise InvalidConfig("all reference rows excluded")

    circuit = calibrate_circuit(rows, tech=tech, cfg=solver_cfg)

    tcas_points = []
    for r in rows:
        if r.t_cas_ns is not None:
            spec = OrgSpec(r.org, r.cells_per_bitline, r.is_m3d)
            geo = compute_areas(spec, tech)
            tcas_points.append((geo.global_bitline_length_f, r.t_cas_ns))
    tcas = fit_tcas_model(tcas_points)

    energy_model, energy_residuals = fit_energy_model(rows, tech)

    # anchor the four-activate window to the slowest (baseline) reference
    # row, with the modeled activation energy so the anchor org scales by
    # exactly 1.0
    anchor_row = max((r for r in rows if r.t_faw_ns is not None),
                     key=lambda r: r.t_faw_ns, default=None)
    if anchor_row is None:
        anchor = FawAnchor()
    else:
        spec = OrgSpec(anchor_row.org, anchor_row.cells_per_bitline,
                       anchor_row.is_m3d)
        bl = BitlineElectricals.from_org(spec)
        anchor = FawAnchor(
            t_faw_ns=anchor_row.t_faw_ns,
            e_activate_nj=energy_model.activation_energy_nj(spec, bl, tech),
        )

    bundle = CalibrationBundle(circuit=circuit, tcas=tcas,
                               energy_model=energy_model, faw_anchor=anchor)

    report = {
        "circuit_residuals": circuit.residuals,
        "tcas_kind": tcas.kind,
        "tcas_residuals_ns": list(tcas.residuals_ns),
        "energy_residuals": energy_residuals,
        "held_out": {},
    }
    for r in reference_rows:
        if r.org in exclude:
            model = derive_org(OrgSpec(r.org, r.cells_per_bitline, r.is_m3d),
                               bundle, tech, solver_cfg)
            held = {"t_rcd_ns": model.timing.t_rcd_ns,
                    "t_cas_ns": model.timing.t_cas_ns,
                    "t_rp_ns": model.timing.t_rp_ns}
            if r.t_rcd_ns:
                held["t_rcd_rel_err"] = model.timing.t_rcd_ns / r.t_rcd_ns - 1.0
            report["held_out"][r.org] = held
    return bundle, report


@dataclass
class OrgModel:
    """Everything derived for one organization."""

    spec: OrgSpec
    geometry: GeometryReport
    electricals: BitlineElectricals
    transient: TransientResult
    timing: TimingParams
    energy: EnergyParams

    def report_dict(self) -> dict:
        out = {"org": self.spec.name,
               "cells_per_bitline": self.spec.cells_per_bitline,
               "is_m3d": self.spec.is_m3d,
               "banks": self.spec.banks,
               "page_size_bits": self.spec.page_size_bits}
        out.update(self.timing.as_dict())
        out.update({k: v for k, v in self.energy.as_dict().items() if k != "org"})
        out.update({k: v for k, v in self.geometry.as_dict().items() if k != "org"})
        out["local_bitline_resistance_ohm"] = self.electricals.r_total_ohm
        out["local_bitline_capacitance_ff"] = self.electricals.c_total_f * 1e15
        out["delta_v"] = self.transient.delta_v
        return out


def derive_org(spec: OrgSpec, bundle: CalibrationBundle,
               tech: TechNode = TechNode(),
               solver_cfg: SolverConfig = SolverConfig()) -> OrgModel:
    """Run the full derivation chain for one organization."""
    geo = compute_areas(spec, tech)
    bl = BitlineElectricals.from_org(spec)
    act = simulate_activation(bundle.circuit.cell, bl, bundle.circuit.sense_amp,
                              tech, solver_cfg, org=spec.name)
    t_rp = simulate_precharge(bundle.circuit.cell, bl, bundle.circuit.sense_amp,
                              tech, solver_cfg, org=spec.name)
    transient = replace(act, t_rp_s=t_rp)
    energy = bundle.energy_model.params_for(spec, geo, bl, tech)
    timing = assemble_timing(spec, geo, transient, bundle.tcas, energy,
                             bundle.faw_anchor)
    return OrgModel(spec=spec, geometry=geo, electricals=bl,
                    transient=transient, timing=timing, energy=energy)


_default_bundle_cache = None


def load_default_bundle() -> CalibrationBundle:
    global _default_bundle_cache
    if _default_bundle_cache is None:
        with data_path(DEFAULT_CALIBRATION_FILE).open() as fh:
            _default_bundle_cache = CalibrationBundle.from_dict(json.load(fh))
    return _default_bundle_cache


def standard_sweep_orgs() -> dict:
    """The ten bundled organizations: {2D, M3D} x {512..32} cells."""
    return load_orgs()
