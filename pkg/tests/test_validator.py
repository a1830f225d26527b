import pytest

from m3dram.simcore import run_simulation
from m3dram.traceio import generate_trace
from m3dram.validator import (
    read_command_log,
    validate_command_log,
    write_command_log,
)


@pytest.fixture(scope="module")
def clean_run(models):
    m = models["ddr4-512"]
    trace = generate_trace("mixed", 3000, seed=17, spec=m.spec)
    res = run_simulation(trace, m.spec, m.timing, m.energy, collect_log=True)
    return m, res


def test_clean_log_passes(clean_run):
    m, res = clean_run
    assert validate_command_log(res.command_log, m.timing) == []


def test_csv_round_trip(clean_run, tmp_path):
    m, res = clean_run
    path = tmp_path / "log.csv"
    write_command_log(str(path), res.command_log)
    back = read_command_log(str(path))
    assert len(back) == len(res.command_log)
    assert validate_command_log(back, m.timing) == []


def _find(log, cmd):
    return next(i for i, e in enumerate(log) if e[1] == cmd)


class TestDetectsViolations:
    def test_early_read(self, clean_run):
        m, res = clean_run
        log = list(res.command_log)
        i = _find(log, "RD" if any(e[1] == "RD" for e in log) else "WR")
        when, cmd, bank, row = log[i]
        log[i] = (when - m.timing.t_rcd_ns / 2, cmd, bank, row)
        assert any("tRCD" in p for p in validate_command_log(log, m.timing))

    def test_early_precharge(self, clean_run):
        m, res = clean_run
        log = list(res.command_log)
        i = _find(log, "PRE")
        when, cmd, bank, row = log[i]
        log[i] = (when - 5.0, cmd, bank, row)
        problems = validate_command_log(log, m.timing)
        assert any("tRAS" in p or "data transfer" in p for p in problems)

    def test_act_during_row_cycle(self, clean_run):
        m, res = clean_run
        log = list(res.command_log)
        acts = [e for e in log if e[1] == "ACT"]
        # duplicate the first ACT a hair later on the same bank
        when, _, bank, row = acts[0]
        log.append((when + 2.0, "ACT", bank, row + 1))
        problems = validate_command_log(log, m.timing)
        assert any("still open" in p or "tRC" in p for p in problems)

    def test_bus_overlap(self, clean_run):
        m, res = clean_run
        log = list(res.command_log)
        when, cmd, bank, row = log[_find(log, "ACT")]
        log.append((when + 0.25, "ACT", (bank + 1) % 8, row))
        assert any("bus overlap" in p
                   for p in validate_command_log(log, m.timing))

    def test_five_acts_in_window(self, models):
        m = models["ddr4-512"]
        t = m.timing
        log = []
        for b in range(5):
            act = b * (t.t_faw_ns / 5.0)
            log.append((act, "ACT", b, 0))
            log.append((act + t.t_rcd_ns, "RD", b, 0))
            log.append((act + t.t_ras_ns, "PRE", b, 0))
        problems = validate_command_log(log, t)
        assert any("five ACTs" in p for p in problems)

    def test_command_inside_refresh_block(self, clean_run):
        m, res = clean_run
        log = list(res.command_log)
        ref = next(e for e in log if e[1] == "REF")
        log.append((ref[0] + 1.0, "ACT", 0, 42))
        problems = validate_command_log(log, m.timing)
        assert any("refresh block" in p for p in problems)

    def test_rw_to_wrong_row(self, clean_run):
        m, res = clean_run
        log = list(res.command_log)
        i = _find(log, "RD" if any(e[1] == "RD" for e in log) else "WR")
        when, cmd, bank, row = log[i]
        log[i] = (when, cmd, bank, row + 1)
        assert any("is open" in p for p in validate_command_log(log, m.timing))

    def test_unknown_command(self, clean_run):
        m, res = clean_run
        log = list(res.command_log) + [(5.0, "NOP", 0, 0)]
        assert any("unknown command" in p
                   for p in validate_command_log(log, m.timing))
