import pytest

from m3dram.energy import EnergyParams
from m3dram.errors import InconsistentInputs, InvalidConfig, Underdetermined
from m3dram.timing import (
    FawAnchor,
    TimingParams,
    assemble_timing,
    fit_tcas_model,
    scale_tfaw,
)

# reference calibration points: (L_GBL in F, measured t_cas in ns)
TCAS_POINTS = [
    (162_687, 10.29),
    (132_969, 8.96),
    (142_569, 9.82),
    (196_095, 12.0),
]


class TestTcasFit:
    def test_all_four_points_within_0p4ns(self):
        model = fit_tcas_model(TCAS_POINTS)
        for l_gbl, t_cas in TCAS_POINTS:
            assert model.predict_ns(l_gbl) == pytest.approx(t_cas, abs=0.4)

    def test_rejects_degenerate_duplicates(self):
        with pytest.raises(Underdetermined):
            fit_tcas_model([(150_000, 10.0)] * 3)

    def test_rejects_too_few(self):
        with pytest.raises(Underdetermined):
            fit_tcas_model(TCAS_POINTS[:2])

    def test_monotone_over_design_span(self):
        model = fit_tcas_model(TCAS_POINTS)
        lengths = [50_000 + i * 2_000 for i in range(101)]
        preds = [model.predict_ns(l) for l in lengths]
        assert all(b > a for a, b in zip(preds, preds[1:]))

    def test_quadratic_term_dropped_without_gain(self):
        # the four reference points barely prefer a parabola; the fitted
        # model must fall back to the line
        model = fit_tcas_model(TCAS_POINTS)
        assert model.kind == "linear"
        assert len(model.coeffs) == 2

    def test_residuals_recorded(self):
        model = fit_tcas_model(TCAS_POINTS)
        assert len(model.residuals_ns) == 4
        assert model.max_residual_ns() < 0.4


class TestScaleTfaw:
    def test_reference_scalings_within_2pct(self):
        assert scale_tfaw(35.8, 0.59, 0.58) == pytest.approx(35.3, rel=0.02)
        assert scale_tfaw(35.8, 0.59, 0.24) == pytest.approx(14.4, rel=0.02)

    def test_identity(self):
        assert scale_tfaw(35.8, 0.59, 0.59) == 35.8

    def test_rejects_nonpositive_energy(self):
        with pytest.raises(InvalidConfig):
            scale_tfaw(35.8, 0.0, 0.5)


class TestTimingParams:
    def test_identities(self):
        p = TimingParams("x", t_rcd_ns=6.77, t_cas_ns=10.29, t_rp_ns=9.58,
                         t_ras_ns=17.06, t_faw_ns=35.8)
        assert p.t_rc_ns == pytest.approx(26.64)
        assert p.close_page_latency_ns == pytest.approx(21.06)

    def test_positivity_enforced(self):
        with pytest.raises(InvalidConfig):
            TimingParams("x", -1.0, 10.0, 9.0, 17.0, 35.0)

    def test_faw_floor(self):
        with pytest.raises(InvalidConfig):
            TimingParams("x", 6.0, 10.0, 9.0, 17.0, t_faw_ns=2.0)


class TestAssembled(object):
    def test_close_page_latencies(self, models):
        assert models["ddr4-512"].timing.close_page_latency_ns == \
            pytest.approx(21.1, abs=0.3)
        assert models["ddr4-256"].timing.close_page_latency_ns == \
            pytest.approx(21.0, abs=0.3)

    def test_m3d128_trc(self, models):
        assert models["m3d-128"].timing.t_rc_ns == pytest.approx(18.05, rel=0.10)

    def test_burst_and_refi_fixed(self, models):
        for m in models.values():
            assert m.timing.t_burst_ns == 4.0
            assert m.timing.t_refi_ns == 7800.0

    def test_faw_anchor_identity(self, models):
        # the anchor org scales by exactly 1.0
        assert models["ddr4-512"].timing.t_faw_ns == pytest.approx(35.8)

    def test_m3d_beats_2d_on_close_page(self, models):
        for cells in (512, 256, 128, 64, 32):
            m3d = models[f"m3d-{cells}"].timing.close_page_latency_ns
            flat = models[f"ddr4-{cells}"].timing.close_page_latency_ns
            assert m3d < flat

    def test_area_latency_dominance(self, models):
        for cells in (512, 256, 128, 64, 32):
            m3d = models[f"m3d-{cells}"]
            flat = models[f"ddr4-{cells}"]
            assert m3d.geometry.die_area_mm2 < flat.geometry.die_area_mm2
            assert m3d.timing.close_page_latency_ns <= \
                flat.timing.close_page_latency_ns

    def test_2d_close_page_minimized_at_256(self, models):
        lat = {c: models[f"ddr4-{c}"].timing.close_page_latency_ns
               for c in (512, 256, 128, 64, 32)}
        assert lat[256] == min(lat.values())
        assert lat[128] < lat[64] < lat[32]

    def test_inconsistent_inputs_rejected(self, models, bundle):
        a = models["ddr4-512"]
        b = models["m3d-128"]
        with pytest.raises(InconsistentInputs):
            assemble_timing(a.spec, b.geometry, a.transient, bundle.tcas,
                            a.energy, bundle.faw_anchor)

    def test_energy_mismatch_rejected(self, models, bundle):
        a = models["ddr4-512"]
        wrong = EnergyParams("other", 0.5, 1.0, 1.0, 30.0)
        with pytest.raises(InconsistentInputs):
            assemble_timing(a.spec, a.geometry, a.transient, bundle.tcas,
                            wrong, bundle.faw_anchor)


def test_faw_anchor_defaults():
    anchor = FawAnchor()
    assert anchor.t_faw_ns == 35.8
    assert anchor.e_activate_nj == 0.59
