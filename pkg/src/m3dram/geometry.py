"""Structural geometry of 2D and monolithic-3D (M3D) DRAM bank organizations.

All lengths are kept in integer feature-size units (F) for as long as
possible so the derived bitline lengths are exact; areas are converted to
mm^2 only at the end. The M3D variants drop the sense-amp / precharge /
write-driver strip from the cell-array tier (it moves to the tier below),
which shortens every subarray and therefore the global bitline.
"""

from dataclasses import dataclass, field

from .errors import InvalidConfig

# Height of the peripheral strip that disappears from the cell-array tier
# in an M3D organization: sense amps + precharge units + write drivers.
SA_STRIP_F = 117
PRECHARGE_STRIP_F = 90
WRITE_DRIVER_STRIP_F = 27

# Residual inter-subarray strip (edge dummy cells / well spacing) present
# in both 2D and M3D stacks. Sized so that 512-cell subarrays come out at
# 1281 F (2D) and 1047 F (M3D), and 128-cell M3D subarrays at 279 F.
RESIDUAL_STRIP_F = 23

# Footprint charged per inter-tier via, including keep-out (~45 nm square).
MIV_FOOTPRINT_MM2 = 2.0e-9

ALLOWED_CELLS_PER_BITLINE = (32, 64, 128, 256, 512)


@dataclass(frozen=True)
class TechNode:
    """Process technology assumptions."""

    feature_size_nm: float = 22.0
    vdd: float = 1.2

    def __post_init__(self):
        if self.feature_size_nm <= 0 or self.vdd <= 0:
            raise InvalidConfig("feature size and VDD must both be positive")

    @property
    def f_mm(self) -> float:
        return self.feature_size_nm * 1e-6

    @property
    def f2_mm2(self) -> float:
        """Area of one F^2 in mm^2."""
        return self.f_mm * self.f_mm


@dataclass(frozen=True)
class PeripheralDims:
    """Per-subarray peripheral strip heights and cell pitches, in F."""

    sa_height: int = SA_STRIP_F
    sa_pitch: int = 6
    precharge_height: int = PRECHARGE_STRIP_F
    write_driver_height: int = WRITE_DRIVER_STRIP_F
    residual_strip_height: int = RESIDUAL_STRIP_F
    cell_area_f2: int = 6
    cell_bitline_pitch: int = 2   # F per cell along the bitline
    cell_wordline_pitch: int = 3  # F per cell along the wordline

    @property
    def removable_strip_height(self) -> int:
        """Strip that moves to the bottom tier in an M3D organization."""
        return self.sa_height + self.precharge_height + self.write_driver_height


@dataclass(frozen=True)
class OrgSpec:
    """One DRAM bank organization (2D or M3D) to be modeled."""

    name: str
    cells_per_bitline: int
    is_m3d: bool
    banks: int = 8
    rows_per_bank: int = 65536
    tiles_per_subarray: int = 32
    cells_per_wordline: int = 512
    page_size_bits: int = 16384
    dims: PeripheralDims = field(default_factory=PeripheralDims)

    def __post_init__(self):
        if self.cells_per_bitline not in ALLOWED_CELLS_PER_BITLINE:
            raise InvalidConfig(
                f"{self.name}: cells_per_bitline must be one of "
                f"{ALLOWED_CELLS_PER_BITLINE}, got {self.cells_per_bitline}"
            )
        if self.rows_per_bank % self.cells_per_bitline != 0:
            raise InvalidConfig(
                f"{self.name}: rows_per_bank ({self.rows_per_bank}) not divisible "
                f"by cells_per_bitline ({self.cells_per_bitline})"
            )

    @property
    def subarrays_per_bank(self) -> int:
        return self.rows_per_bank // self.cells_per_bitline

    @property
    def capacity_bits(self) -> int:
        return self.banks * self.rows_per_bank * self.page_size_bits


@dataclass(frozen=True)
class GeometryReport:
    """Derived lengths (F), areas (mm^2) and via counts for one organization."""

    org: str
    local_bitline_length_f: int
    global_bitline_length_f: int
    subarray_height_f: int
    subarray_width_f: int
    subarrays_per_bank: int
    subarray_area_mm2: float
    bank_area_mm2: float
    die_area_mm2: float
    miv_count_per_bank: int
    miv_area_per_bank_mm2: float
    cell_density_bits_per_mm2: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def local_bitline_length(spec: OrgSpec) -> int:
    """Local bitline span in F: one cell pitch per cell."""
    return spec.cells_per_bitline * spec.dims.cell_bitline_pitch


def derive_subarray_height(spec: OrgSpec) -> int:
    """Subarray pitch along the bitline direction, in F.

    2D subarrays carry the full SA/precharge/write-driver strip; M3D ones
    keep only the residual strip because the peripherals sit underneath.
    """
    height = local_bitline_length(spec) + spec.dims.residual_strip_height
    if not spec.is_m3d:
        height += spec.dims.removable_strip_height
    return height


def derive_global_bitline_length(spec: OrgSpec) -> int:
    """Global bitline span in F: it bridges the subarray stack.

    The span covers the gaps between the first and last subarray of the
    bank, i.e. (subarrays - 1) subarray pitches.
    """
    return (spec.subarrays_per_bank - 1) * derive_subarray_height(spec)


def count_mivs(spec: OrgSpec) -> int:
    """Inter-tier vias per bank for an M3D organization (0 for 2D).

    Per subarray: one via per local bitline down to its sense amp, half
    that many for the SA I/O side (a folded-bitline SA serves a bitline
    pair), one via per local wordline per tile for the wordline drivers,
    plus one control via.
    """
    if not spec.is_m3d:
        return 0
    bitlines = spec.tiles_per_subarray * spec.cells_per_wordline
    wordline_vias = spec.cells_per_bitline * spec.tiles_per_subarray
    per_subarray = bitlines + bitlines // 2 + wordline_vias + 1
    return per_subarray * spec.subarrays_per_bank


def compute_areas(spec: OrgSpec, tech: TechNode = TechNode()) -> GeometryReport:
    """Full geometry report for one organization."""
    dims = spec.dims
    height = derive_subarray_height(spec)
    width = spec.tiles_per_subarray * spec.cells_per_wordline * dims.cell_wordline_pitch
    subs = spec.subarrays_per_bank

    subarray_area = width * height * tech.f2_mm2
    bank_area = width * (subs * height) * tech.f2_mm2
    die_area = spec.banks * bank_area
    mivs = count_mivs(spec)

    return GeometryReport(
        org=spec.name,
        local_bitline_length_f=local_bitline_length(spec),
        global_bitline_length_f=derive_global_bitline_length(spec),
        subarray_height_f=height,
        subarray_width_f=width,
        subarrays_per_bank=subs,
        subarray_area_mm2=subarray_area,
        bank_area_mm2=bank_area,
        die_area_mm2=die_area,
        miv_count_per_bank=mivs,
        miv_area_per_bank_mm2=mivs * MIV_FOOTPRINT_MM2,
        cell_density_bits_per_mm2=spec.capacity_bits / die_area,
    )
