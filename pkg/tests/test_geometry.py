import pytest

from m3dram.errors import InvalidConfig
from m3dram.geometry import (
    GeometryReport,
    OrgSpec,
    PeripheralDims,
    TechNode,
    compute_areas,
    count_mivs,
    derive_global_bitline_length,
    derive_subarray_height,
)


def spec(cells, m3d, name=None):
    return OrgSpec(name or f"{'m3d' if m3d else 'ddr4'}-{cells}", cells, m3d)


# measured reference geometry: (cells, m3d) -> (subarray height F, L_GBL F)
EXACT_LENGTHS = {
    (512, False): (1281, 162_687),
    (512, True): (1047, 132_969),
    (128, True): (279, 142_569),
    (256, False): (769, 196_095),
}


@pytest.mark.parametrize("key,expected", EXACT_LENGTHS.items())
def test_bitline_lengths_exact(key, expected):
    cells, m3d = key
    s = spec(cells, m3d)
    assert derive_subarray_height(s) == expected[0]
    assert derive_global_bitline_length(s) == expected[1]


def test_gbl_identity_all_configs():
    for m3d in (False, True):
        for cells in (32, 64, 128, 256, 512):
            s = spec(cells, m3d)
            subs = s.rows_per_bank // cells
            assert derive_global_bitline_length(s) == \
                (subs - 1) * derive_subarray_height(s)


def test_m3d_removes_peripheral_strip():
    dims = PeripheralDims()
    assert dims.removable_strip_height == 234
    for cells in (32, 64, 128, 256, 512):
        assert (derive_subarray_height(spec(cells, False))
                - derive_subarray_height(spec(cells, True))) == 234


@pytest.mark.parametrize("cells,m3d,expected", [
    (512, True, 5_243_008),
    (128, True, 14_680_576),
    (512, False, 0),
    (64, False, 0),
])
def test_miv_counts(cells, m3d, expected):
    assert count_mivs(spec(cells, m3d)) == expected


def test_miv_count_scales_with_subarrays():
    per_512 = count_mivs(spec(512, True)) / spec(512, True).subarrays_per_bank
    s64 = spec(64, True)
    bitlines = 32 * 512
    per_64 = bitlines + bitlines // 2 + 64 * 32 + 1
    assert count_mivs(s64) == per_64 * s64.subarrays_per_bank
    assert per_512 == bitlines + bitlines // 2 + 512 * 32 + 1


@pytest.mark.parametrize("cells,m3d,bank_mm2", [
    (512, False, 3.926),
    (512, True, 3.209),
    (128, True, 3.42),
])
def test_bank_areas_within_2pct(cells, m3d, bank_mm2):
    rep = compute_areas(spec(cells, m3d))
    assert rep.bank_area_mm2 == pytest.approx(bank_mm2, rel=0.02)


def test_subarray_and_miv_areas():
    rep512 = compute_areas(spec(512, True))
    assert rep512.miv_area_per_bank_mm2 == pytest.approx(0.01, abs=0.002)
    rep128 = compute_areas(spec(128, True))
    assert 0.0066 <= rep128.subarray_area_mm2 <= 0.007
    assert rep128.miv_area_per_bank_mm2 == pytest.approx(0.029, abs=0.002)
    assert compute_areas(spec(512, False)).miv_area_per_bank_mm2 == 0.0


def test_subarray_width():
    rep = compute_areas(spec(512, False))
    assert rep.subarray_width_f == 49_152


def test_m3d_shrinks_bank_area_at_fixed_cells():
    for cells in (32, 64, 128, 256, 512):
        a2d = compute_areas(spec(cells, False)).bank_area_mm2
        a3d = compute_areas(spec(cells, True)).bank_area_mm2
        assert a3d < a2d


def test_2d_bank_area_grows_as_bitlines_shorten():
    areas = [compute_areas(spec(c, False)).bank_area_mm2
             for c in (512, 256, 128, 64, 32)]
    assert all(b > a for a, b in zip(areas, areas[1:]))


def test_m3d_128_die_reduction_vs_baseline():
    base = compute_areas(spec(512, False)).die_area_mm2
    m3d = compute_areas(spec(128, True)).die_area_mm2
    assert (base - m3d) / base >= 0.12


def test_die_area_and_density():
    rep = compute_areas(spec(512, False))
    assert rep.die_area_mm2 == pytest.approx(8 * rep.bank_area_mm2)
    s = spec(512, False)
    assert rep.cell_density_bits_per_mm2 == pytest.approx(
        s.capacity_bits / rep.die_area_mm2)


def test_orgspec_validation():
    with pytest.raises(InvalidConfig):
        OrgSpec("bad", 100, False)          # not a supported bitline length
    with pytest.raises(InvalidConfig):
        OrgSpec("bad", 512, False, rows_per_bank=1000)  # not divisible
    with pytest.raises(InvalidConfig):
        TechNode(feature_size_nm=-1.0)


def test_report_dict_round():
    rep = compute_areas(spec(512, False))
    assert isinstance(rep, GeometryReport)
    d = rep.as_dict()
    assert d["global_bitline_length_f"] == 162_687
    assert d["org"] == "ddr4-512"
