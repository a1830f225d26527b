"""Independent command-log checker.

Re-scans an emitted command log against every timing constraint using its
own bookkeeping; shares no scheduling code with the controller, so a
scheduler bug cannot hide itself. A log entry is (time_ns, cmd, bank, row)
with cmd one of ACT, RD, WR, PRE, REF (REF rows use bank = -1 and mark a
full all-bank refresh block).
"""

import csv
from bisect import bisect_right

from .errors import TraceParseError
from .timing import TimingParams

BUS_SLOT_NS = 1.0
TOL = 1e-6  # float slack on all comparisons

REFRESH_ROW_CYCLES = 8


def read_command_log(path: str) -> list:
    entries = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row or row[0].startswith("#") or row[0] == "time_ns":
                continue
            if len(row) != 4:
                raise TraceParseError(line_no, f"expected 4 columns, got {len(row)}")
            try:
                entries.append((float(row[0]), row[1].strip(),
                                int(row[2]), int(row[3])))
            except ValueError as exc:
                raise TraceParseError(line_no, str(exc)) from None
    return entries


def validate_command_log(log, timings: TimingParams, banks: int = 8) -> list:
    """Return a list of violation descriptions (empty when clean)."""
    t = timings
    problems = []
    entries = sorted(log, key=lambda e: (e[0], e[1], e[2]))

    refresh_blocks = [(e[0], e[0] + REFRESH_ROW_CYCLES * t.t_rc_ns)
                      for e in entries if e[1] == "REF"]

    # shared command bus: one slot per command
    cmd_times = [e[0] for e in entries if e[1] != "REF"]
    for a, b in zip(cmd_times, cmd_times[1:]):
        if b - a < BUS_SLOT_NS - TOL:
            problems.append(f"bus overlap: commands at {a:.3f} and {b:.3f} ns")

    # nothing may issue inside an all-bank refresh block
    block_starts = [lo for lo, _ in refresh_blocks]
    for when, cmd, bank, row in entries:
        if cmd == "REF":
            continue
        i = bisect_right(block_starts, when) - 1
        if i >= 0:
            lo, hi = refresh_blocks[i]
            if lo - TOL < when < hi - TOL:
                problems.append(
                    f"{cmd} bank {bank} at {when:.3f} ns inside refresh "
                    f"block [{lo:.1f}, {hi:.1f})"
                )

    # four-activate window, all banks combined
    acts = [e[0] for e in entries if e[1] == "ACT"]
    for i in range(4, len(acts)):
        if acts[i] - acts[i - 4] < t.t_faw_ns - TOL:
            problems.append(
                f"five ACTs within {acts[i] - acts[i - 4]:.3f} ns "
                f"(window {t.t_faw_ns:.3f}) ending at {acts[i]:.3f}"
            )

    # per-bank protocol and spacing
    last_act = [None] * banks
    last_rw = [None] * banks
    open_row = [None] * banks
    closed_at = [None] * banks  # time PRE issued, for tRP
    for when, cmd, bank, row in entries:
        if cmd == "REF":
            continue
        if not 0 <= bank < banks:
            problems.append(f"{cmd} at {when:.3f} ns addresses bad bank {bank}")
            continue
        if cmd == "ACT":
            if open_row[bank] is not None:
                problems.append(
                    f"ACT bank {bank} at {when:.3f} ns with row "
                    f"{open_row[bank]} still open"
                )
            if last_act[bank] is not None and when - last_act[bank] < t.t_rc_ns - TOL:
                problems.append(
                    f"ACT bank {bank} at {when:.3f} ns only "
                    f"{when - last_act[bank]:.3f} ns after previous ACT "
                    f"(tRC {t.t_rc_ns:.3f})"
                )
            if closed_at[bank] is not None and when - closed_at[bank] < t.t_rp_ns - TOL:
                problems.append(
                    f"ACT bank {bank} at {when:.3f} ns during precharge "
                    f"(PRE at {closed_at[bank]:.3f}, tRP {t.t_rp_ns:.3f})"
                )
            last_act[bank] = when
            open_row[bank] = row
            last_rw[bank] = None
        elif cmd in ("RD", "WR"):
            if open_row[bank] is None:
                problems.append(f"{cmd} bank {bank} at {when:.3f} ns with no open row")
            elif open_row[bank] != row:
                problems.append(
                    f"{cmd} bank {bank} at {when:.3f} ns to row {row} but "
                    f"row {open_row[bank]} is open"
                )
            if last_act[bank] is None or when - last_act[bank] < t.t_rcd_ns - TOL:
                problems.append(
                    f"{cmd} bank {bank} at {when:.3f} ns before tRCD "
                    f"({t.t_rcd_ns:.3f}) elapsed"
                )
            last_rw[bank] = when
        elif cmd == "PRE":
            if open_row[bank] is None:
                problems.append(f"PRE bank {bank} at {when:.3f} ns with no open row")
            if last_act[bank] is None or when - last_act[bank] < t.t_ras_ns - TOL:
                problems.append(
                    f"PRE bank {bank} at {when:.3f} ns before tRAS "
                    f"({t.t_ras_ns:.3f}) elapsed"
                )
            if last_rw[bank] is not None and when - last_rw[bank] < t.t_burst_ns - TOL:
                problems.append(
                    f"PRE bank {bank} at {when:.3f} ns cuts off the data "
                    f"transfer started at {last_rw[bank]:.3f}"
                )
            open_row[bank] = None
            closed_at[bank] = when
        else:
            problems.append(f"unknown command {cmd!r} at {when:.3f} ns")
    return problems


def write_command_log(path: str, log):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_ns", "command", "bank", "row"])
        for when, cmd, bank, row in log:
            writer.writerow([f"{when:.6f}", cmd, bank, row])
