"""Config-file parsing and bundled data access.

Organizations live in an INI-style file, one section per organization:

    [ddr4-512]
    cells_per_bitline = 512
    m3d = false
    # optional PeripheralDims overrides, in F:
    # sa_height = 117

A [solver] section may override transient-solver settings, and a
[simulator] section the power/trace constants. The package ships default
organization, reference-measurement and calibration files under
m3dram/data/.
"""

import configparser
from importlib import resources

from .calibration import ReferenceTiming
from .errors import InvalidConfig
from .geometry import OrgSpec, PeripheralDims

_DIM_KEYS = (
    "sa_height", "sa_pitch", "precharge_height", "write_driver_height",
    "residual_strip_height", "cell_area_f2", "cell_bitline_pitch",
    "cell_wordline_pitch",
)

_RESERVED_SECTIONS = ("solver", "simulator", "tech")


def data_path(name: str):
    return resources.files("m3dram.data").joinpath(name)


def _parser(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    return cp


def load_orgs(path=None) -> dict:
    """Parse organization definitions; returns {name: OrgSpec} in file order."""
    if path is None:
        path = data_path("orgs.cfg")
    cp = _parser(path)
    orgs = {}
    for section in cp.sections():
        if section in _RESERVED_SECTIONS:
            continue
        sec = cp[section]
        try:
            cells = sec.getint("cells_per_bitline")
            m3d = sec.getboolean("m3d")
        except ValueError as exc:
            raise InvalidConfig(f"[{section}]: {exc}") from None
        if cells is None or m3d is None:
            raise InvalidConfig(
                f"[{section}] needs cells_per_bitline and m3d"
            )
        overrides = {k: sec.getint(k) for k in _DIM_KEYS if k in sec}
        dims = PeripheralDims(**overrides) if overrides else PeripheralDims()
        kwargs = {}
        for key in ("banks", "rows_per_bank", "tiles_per_subarray",
                    "cells_per_wordline", "page_size_bits"):
            if key in sec:
                kwargs[key] = sec.getint(key)
        orgs[section] = OrgSpec(section, cells, m3d, dims=dims, **kwargs)
    if not orgs:
        raise InvalidConfig(f"no organizations defined in {path}")
    return orgs


_REF_FLOAT_KEYS = (
    "t_rcd_ns", "t_cas_ns", "t_rp_ns", "t_rc_ns", "t_faw_ns",
    "e_activate_nj", "e_read_nj", "e_write_nj", "e_refresh_nj",
)


def load_reference(path=None) -> list:
    """Parse measured reference rows used as the calibration target."""
    if path is None:
        path = data_path("reference_targets.cfg")
    cp = _parser(path)
    rows = []
    for section in cp.sections():
        if section in _RESERVED_SECTIONS:
            continue
        sec = cp[section]
        try:
            cells = sec.getint("cells_per_bitline")
            m3d = sec.getboolean("m3d")
            values = {k: sec.getfloat(k) for k in _REF_FLOAT_KEYS if k in sec}
        except ValueError as exc:
            raise InvalidConfig(f"{path}: [{section}]: {exc}") from None
        if cells is None or m3d is None:
            raise InvalidConfig(
                f"{path}: [{section}] needs cells_per_bitline and m3d"
            )
        rows.append(ReferenceTiming(org=section, cells_per_bitline=cells,
                                    is_m3d=m3d, **values))
    if not rows:
        raise InvalidConfig(f"no reference rows in {path}")
    return rows


def load_solver_overrides(path) -> dict:
    """[solver] section -> SolverConfig keyword overrides."""
    cp = _parser(path)
    if not cp.has_section("solver"):
        return {}
    sec = cp["solver"]
    out = {}
    if "step_ps" in sec:
        out["dt_s"] = sec.getfloat("step_ps") * 1e-12
    if "horizon_ns" in sec:
        out["horizon_s"] = sec.getfloat("horizon_ns") * 1e-9
    if "segments" in sec:
        out["n_segments"] = sec.getint("segments")
    if "settle_tol_mv" in sec:
        out["settle_tol_v"] = sec.getfloat("settle_tol_mv") * 1e-3
    if "precharge_tol_pct" in sec:
        out["precharge_tol_frac"] = sec.getfloat("precharge_tol_pct") / 100.0
    if "sample_every" in sec:
        out["sample_every"] = sec.getint("sample_every")
    return out
