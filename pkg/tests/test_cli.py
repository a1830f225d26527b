import csv
import io
import json
from contextlib import redirect_stderr, redirect_stdout

import pytest

from m3dram.cli import main


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def test_params_baseline_values():
    code, out, _ = run_cli("params", "--org", "ddr4-512", "--format", "json")
    assert code == 0
    rep = json.loads(out)[0]
    assert rep["t_rcd_ns"] == pytest.approx(6.77, rel=0.10)
    assert rep["bank_area_mm2"] == pytest.approx(3.9, rel=0.02)
    assert rep["global_bitline_length_f"] == 162_687


def test_params_m3d128_values():
    code, out, _ = run_cli("params", "--org", "m3d-128", "--format", "json")
    assert code == 0
    rep = json.loads(out)[0]
    assert rep["t_faw_ns"] == pytest.approx(14.4, rel=0.02)
    assert rep["miv_count_per_bank"] == 14_680_576


def test_params_text_format():
    code, out, _ = run_cli("params", "--org", "ddr4-512")
    assert code == 0
    assert "t_rcd_ns" in out and "bank_area_mm2" in out


def test_unknown_org_lists_known():
    code, _, err = run_cli("params", "--org", "ddr5-9000")
    assert code == 2
    assert "ddr5-9000" in err
    assert "ddr4-512" in err  # diagnostic lists the known names


def test_usage_error_exit_code():
    code, _, _ = run_cli("params", "--format", "yaml")
    assert code == 1
    code, _, _ = run_cli("no-such-command")
    assert code == 1


def test_sweep_shape_properties(tmp_path):
    out_file = tmp_path / "sweep.csv"
    code, _, _ = run_cli("sweep", "-o", str(out_file))
    assert code == 0
    rows = list(csv.DictReader(out_file.open()))
    assert len(rows) == 10
    by_org = {r["org"]: r for r in rows}
    assert float(by_org["ddr4-512"]["die_area_norm"]) == 1.0

    flat = {int(r["cells_per_bitline"]): float(r["close_page_latency_ns"])
            for r in rows if r["is_m3d"] == "0"}
    assert flat[256] == min(flat.values())
    assert flat[128] < flat[64] < flat[32]

    rcd = {int(r["cells_per_bitline"]): float(r["t_rcd_ns"])
           for r in rows if r["is_m3d"] == "0"}
    assert abs(rcd[32] - rcd[64]) / rcd[64] < 0.05

    for cells in (512, 256, 128, 64, 32):
        m3d = next(r for r in rows
                   if r["is_m3d"] == "1" and int(r["cells_per_bitline"]) == cells)
        f = next(r for r in rows
                 if r["is_m3d"] == "0" and int(r["cells_per_bitline"]) == cells)
        assert float(m3d["die_area_norm"]) < float(f["die_area_norm"])
        assert float(m3d["close_page_latency_ns"]) <= \
            float(f["close_page_latency_ns"])


def test_gen_trace_then_simulate_then_validate(tmp_path):
    trace = tmp_path / "t.trace"
    code, _, err = run_cli("gen-trace", "--kind", "mixed", "--n", "500",
                           "--seed", "3", "-o", str(trace))
    assert code == 0

    prefix = str(tmp_path / "cmds")
    out_file = tmp_path / "sim.csv"
    code, _, _ = run_cli("simulate", "--trace", str(trace),
                         "--org", "m3d-128", "--dump-commands", prefix,
                         "-o", str(out_file))
    assert code == 0
    rows = list(csv.DictReader(out_file.open()))
    assert rows[0]["org"] == "m3d-128"
    assert int(rows[0]["n_reads"]) + int(rows[0]["n_writes"]) == 500

    code, out, _ = run_cli("validate-log", "--org", "m3d-128",
                           "--log", f"{prefix}.m3d-128.csv")
    assert code == 0
    assert "no timing violations" in out


def test_validate_log_flags_corruption(tmp_path):
    trace = tmp_path / "t.trace"
    run_cli("gen-trace", "--kind", "uniform", "--n", "100", "--seed", "1",
            "-o", str(trace))
    prefix = str(tmp_path / "cmds")
    run_cli("simulate", "--trace", str(trace), "--org", "ddr4-512",
            "--dump-commands", prefix, "-o", str(tmp_path / "s.csv"))
    log_path = f"{prefix}.ddr4-512.csv"
    lines = open(log_path).read().splitlines()
    # pull the first read 3 ns earlier: violates tRCD
    for i, line in enumerate(lines):
        if ",RD," in line:
            t = float(line.split(",")[0])
            lines[i] = f"{t - 3.0:.6f}," + line.split(",", 1)[1]
            break
    open(log_path, "w").write("\n".join(lines) + "\n")
    code, _, err = run_cli("validate-log", "--org", "ddr4-512",
                           "--log", log_path)
    assert code == 2
    assert "violation" in err


def test_simulate_generated_orderings(tmp_path):
    out_file = tmp_path / "sim.csv"
    code, _, _ = run_cli("simulate", "--gen", "uniform", "--n", "20000",
                         "--seed", "5", "--mean-gap", "16", "-o", str(out_file))
    assert code == 0
    rows = {r["org"]: r for r in csv.DictReader(out_file.open())}
    lat = {k: float(v["avg_access_latency_ns"]) for k, v in rows.items()}
    p = {k: float(v["p_total_w"]) for k, v in rows.items()}
    assert lat["m3d-128"] < lat["m3d-512"] < lat["ddr4-512"]
    assert p["m3d-512"] < p["ddr4-512"] and p["m3d-128"] < p["ddr4-512"]


def test_calibrate_writes_json(tmp_path):
    out_file = tmp_path / "cal.json"
    code, _, err = run_cli("calibrate", "-o", str(out_file))
    assert code == 0
    payload = json.loads(out_file.read_text())
    assert "circuit" in payload and "tcas" in payload and "energy" in payload
    assert "worst circuit residual" in err

    # the written calibration is immediately usable
    code, out, _ = run_cli("params", "--org", "ddr4-512", "--format", "json",
                           "--calibration", str(out_file))
    assert code == 0


def test_calibrate_held_out_report(tmp_path):
    out_file = tmp_path / "cal.json"
    code, _, err = run_cli("calibrate", "--exclude", "m3d-128",
                           "-o", str(out_file))
    assert code == 0
    assert "held out m3d-128" in err
    payload = json.loads(out_file.read_text())
    assert "m3d-128" in payload["report"]["held_out"]


def test_corrupt_reference_file(tmp_path):
    bad = tmp_path / "ref.cfg"
    bad.write_text("[ddr4-512]\ncells_per_bitline = twelve\nm3d = false\n")
    code, _, err = run_cli("calibrate", "--reference", str(bad))
    assert code == 2
    assert "ddr4-512" in err


def test_missing_trace_file():
    code, _, err = run_cli("simulate", "--trace", "/nonexistent/x.trace",
                           "--org", "ddr4-512")
    assert code == 2


def test_outputs_byte_identical_across_invocations(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run_cli("sweep", "-o", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()

    for path in (a, b):
        code, _, _ = run_cli("simulate", "--gen", "stream", "--n", "2000",
                             "--seed", "11", "--org", "m3d-512",
                             "-o", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_waveform_dump(tmp_path):
    wav = tmp_path / "wave.csv"
    code, _, _ = run_cli("params", "--org", "ddr4-512",
                         "--dump-waveform", str(wav))
    assert code == 0
    rows = list(csv.DictReader(wav.open()))
    assert len(rows) > 100
    assert set(rows[0]) == {"time_ns", "v_bitline", "v_cell"}
    # the trace is plot-ready: time strictly grows, voltages in range
    times = [float(r["time_ns"]) for r in rows]
    assert all(b >= a for a, b in zip(times, times[1:]))
    assert all(0.0 <= float(r["v_bitline"]) <= 1.3 for r in rows)
