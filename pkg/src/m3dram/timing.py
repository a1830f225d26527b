"""Assembles the full timing parameter set for an organization.

tRCD/tRAS/tRP come from the transient simulation; tCAS from a fitted
global-bitline-length model; tFAW by scaling the baseline window with
activation energy (constant charge budget per window); tBURST and tREFI
are fixed standard values at the 1 GHz command clock.
"""

import math
from dataclasses import dataclass

import numpy as np

from .circuit import TransientResult
from .energy import EnergyParams
from .errors import InconsistentInputs, InvalidConfig, Underdetermined
from .geometry import GeometryReport, OrgSpec

T_BURST_NS = 4.0      # 4 cycles at 1 GHz
T_REFI_NS = 7800.0

# L_GBL span (in F) over which a fitted tCAS model must stay monotone
TCAS_MONOTONE_SPAN_F = (50_000.0, 250_000.0)
# quadratic term kept only if it cuts the residual by at least this factor
TCAS_QUAD_GAIN = 0.20
_L_SCALE = 1e5  # conditioning: fit against L/1e5


@dataclass(frozen=True)
class TimingParams:
    org: str
    t_rcd_ns: float
    t_cas_ns: float
    t_rp_ns: float
    t_ras_ns: float
    t_faw_ns: float
    t_refi_ns: float = T_REFI_NS
    t_burst_ns: float = T_BURST_NS

    def __post_init__(self):
        vals = (self.t_rcd_ns, self.t_cas_ns, self.t_rp_ns, self.t_ras_ns,
                self.t_faw_ns, self.t_refi_ns, self.t_burst_ns)
        if min(vals) <= 0.0:
            raise InvalidConfig(f"{self.org}: timing parameters must be positive")
        if self.t_faw_ns < self.t_burst_ns:
            raise InvalidConfig(f"{self.org}: t_faw below t_burst")

    @property
    def t_rc_ns(self) -> float:
        return self.t_ras_ns + self.t_rp_ns

    @property
    def close_page_latency_ns(self) -> float:
        return self.t_rcd_ns + self.t_cas_ns + self.t_burst_ns

    def as_dict(self) -> dict:
        return {
            "org": self.org,
            "t_rcd_ns": self.t_rcd_ns,
            "t_cas_ns": self.t_cas_ns,
            "t_rp_ns": self.t_rp_ns,
            "t_ras_ns": self.t_ras_ns,
            "t_rc_ns": self.t_rc_ns,
            "t_faw_ns": self.t_faw_ns,
            "t_refi_ns": self.t_refi_ns,
            "t_burst_ns": self.t_burst_ns,
            "close_page_latency_ns": self.close_page_latency_ns,
        }


@dataclass(frozen=True)
class TcasModel:
    """t_cas (ns) as a polynomial in the global bitline length (F)."""

    coeffs: tuple               # (a, b[, c]) against L/_L_SCALE
    residuals_ns: tuple
    kind: str                   # "linear" or "quadratic"

    def predict_ns(self, l_gbl_f: float) -> float:
        x = l_gbl_f / _L_SCALE
        acc = 0.0
        for k, c in enumerate(self.coeffs):
            acc += c * x ** k
        return acc

    def max_residual_ns(self) -> float:
        return max(abs(r) for r in self.residuals_ns) if self.residuals_ns else 0.0


def _monotone_increasing(coeffs, span=TCAS_MONOTONE_SPAN_F) -> bool:
    lo, hi = (s / _L_SCALE for s in span)
    if len(coeffs) == 2:
        return coeffs[1] > 0.0
    # quadratic derivative is linear; checking the endpoints suffices
    d_lo = coeffs[1] + 2.0 * coeffs[2] * lo
    d_hi = coeffs[1] + 2.0 * coeffs[2] * hi
    return d_lo > 0.0 and d_hi > 0.0


def fit_tcas_model(points) -> TcasModel:
    """Least-squares fit of t_cas versus L_GBL.

    Needs at least three distinct lengths. The quadratic term is kept only
    when it reduces the squared residual by >= 20% and stays monotone over
    the design span; four calibration points do not support more.
    """
    pts = [(float(l), float(t)) for l, t in points]
    distinct = {l for l, _ in pts}
    if len(pts) < 3 or len(distinct) < 3:
        raise Underdetermined(
            f"tCAS fit needs >= 3 distinct lengths, got {len(distinct)}"
        )
    x = np.array([l / _L_SCALE for l, _ in pts])
    y = np.array([t for _, t in pts])

    a_lin = np.vstack([np.ones_like(x), x]).T
    c_lin, *_ = np.linalg.lstsq(a_lin, y, rcond=None)
    r_lin = a_lin @ c_lin - y
    sse_lin = float(r_lin @ r_lin)

    a_quad = np.vstack([np.ones_like(x), x, x * x]).T
    c_quad, *_ = np.linalg.lstsq(a_quad, y, rcond=None)
    r_quad = a_quad @ c_quad - y
    sse_quad = float(r_quad @ r_quad)

    if (sse_quad <= (1.0 - TCAS_QUAD_GAIN) * sse_lin
            and _monotone_increasing(tuple(c_quad))):
        return TcasModel(tuple(float(c) for c in c_quad),
                         tuple(float(r) for r in r_quad), "quadratic")
    if not _monotone_increasing(tuple(c_lin)):
        raise Underdetermined("fitted tCAS model is not increasing in length")
    return TcasModel(tuple(float(c) for c in c_lin),
                     tuple(float(r) for r in r_lin), "linear")


def scale_tfaw(base_tfaw_ns: float, base_act_energy_nj: float,
               new_act_energy_nj: float) -> float:
    """Four-activate window scaled proportionally to activation energy.

    The window protects the power-delivery network; holding the charge
    drawn per window constant makes it proportional to the energy of one
    activation.
    """
    if base_act_energy_nj <= 0.0 or new_act_energy_nj <= 0.0:
        raise InvalidConfig("activation energies must be positive")
    return base_tfaw_ns * (new_act_energy_nj / base_act_energy_nj)


@dataclass(frozen=True)
class FawAnchor:
    """Baseline four-activate window and its activation energy."""

    t_faw_ns: float = 35.8
    e_activate_nj: float = 0.59


def assemble_timing(spec: OrgSpec, geo: GeometryReport,
                    transient: TransientResult, tcas_model: TcasModel,
                    energy: EnergyParams, faw_anchor: FawAnchor) -> TimingParams:
    """Combine the per-source timings into one TimingParams set."""
    names = {spec.name, geo.org, energy.org}
    if transient.org:
        names.add(transient.org)
    if len(names) != 1:
        raise InconsistentInputs(f"inputs from different organizations: {names}")
    if transient.t_rp_s is None:
        raise InconsistentInputs(f"{spec.name}: transient result lacks t_rp")

    t_faw = scale_tfaw(faw_anchor.t_faw_ns, faw_anchor.e_activate_nj,
                       energy.e_activate_nj)
    params = TimingParams(
        org=spec.name,
        t_rcd_ns=transient.t_rcd_s * 1e9,
        t_cas_ns=tcas_model.predict_ns(geo.global_bitline_length_f),
        t_rp_ns=transient.t_rp_s * 1e9,
        t_ras_ns=transient.t_ras_s * 1e9,
        t_faw_ns=t_faw,
    )
    assert math.isclose(params.t_rc_ns, params.t_ras_ns + params.t_rp_ns)
    return params
