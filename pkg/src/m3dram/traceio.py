"""Memory trace parsing, serialization, and synthetic trace generation.

Trace grammar, one record per line:

    <cycle> <R|W> <0xADDRESS>

Cycles are non-negative integers and non-decreasing within a file; `#`
starts a comment; blank lines are ignored. Files ending in .gz are read
and written gzip-compressed.
"""

import gzip
import random
from dataclasses import dataclass

from .addrmap import LINE_BYTES, AddressMap
from .errors import InvalidConfig, OrderViolation, TraceParseError
from .geometry import OrgSpec

TRACE_KINDS = ("uniform", "stream", "conflict", "mixed")

MIXED_READ_FRACTION = 0.7
DEFAULT_MEAN_GAP_CYCLES = 10.0


@dataclass(frozen=True)
class TraceRecord:
    cycle: int
    op: str          # 'R' or 'W'
    address: int

    def line(self) -> str:
        return f"{self.cycle} {self.op} 0x{self.address:X}"


def parse_trace(stream) -> list:
    """Parse a line iterable into validated, ordered TraceRecords."""
    records = []
    last_cycle = -1
    for line_no, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise TraceParseError(line_no, f"expected 3 fields, got {len(parts)}")
        cyc_s, op, addr_s = parts
        try:
            cycle = int(cyc_s)
        except ValueError:
            raise TraceParseError(line_no, f"bad cycle {cyc_s!r}") from None
        if cycle < 0:
            raise TraceParseError(line_no, f"negative cycle {cycle}")
        if op not in ("R", "W"):
            raise TraceParseError(line_no, f"bad op {op!r} (want R or W)")
        try:
            address = int(addr_s, 16)
        except ValueError:
            raise TraceParseError(line_no, f"bad address {addr_s!r}") from None
        if address < 0 or address >= 1 << 64:
            raise TraceParseError(line_no, f"address {addr_s} out of 64-bit range")
        if cycle < last_cycle:
            raise OrderViolation(
                line_no, f"cycle {cycle} decreased (previous {last_cycle})"
            )
        last_cycle = cycle
        records.append(TraceRecord(cycle, op, address))
    return records


def _open_text(path: str, mode: str):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t")
    return open(path, mode)


def read_trace(path: str) -> list:
    with _open_text(path, "r") as fh:
        return parse_trace(fh)


def serialize_trace(records, stream):
    for rec in records:
        stream.write(rec.line() + "\n")


def write_trace(path: str, records):
    with _open_text(path, "w") as fh:
        serialize_trace(records, fh)


def generate_trace(kind: str, n: int, seed: int, spec: OrgSpec,
                   mean_gap_cycles: float = DEFAULT_MEAN_GAP_CYCLES) -> list:
    """Deterministic synthetic trace of n requests.

    uniform   reads, addresses uniform over the die
    stream    reads, sequential cache lines
    conflict  reads, one bank, distinct rows (maximal row-cycle pressure)
    mixed     uniform addresses, 70% reads / 30% writes

    Arrivals form a Poisson process (exponential gaps, configurable mean).
    """
    if kind not in TRACE_KINDS:
        raise InvalidConfig(f"unknown trace kind {kind!r}; want one of {TRACE_KINDS}")
    if n <= 0:
        raise InvalidConfig("trace length must be positive")

    rng = random.Random(seed)
    amap = AddressMap.for_org(spec)
    lines_total = amap.total_bytes // LINE_BYTES
    rows = 1 << amap.row_bits

    records = []
    cycle = 0
    for i in range(n):
        if kind == "uniform" or kind == "mixed":
            address = rng.randrange(lines_total) * LINE_BYTES
        elif kind == "stream":
            address = (i % lines_total) * LINE_BYTES
        else:  # conflict: same bank, walk distinct rows
            address = amap.encode(bank=0, row=i % rows, column=0)
        op = "R"
        if kind == "mixed" and rng.random() >= MIXED_READ_FRACTION:
            op = "W"
        records.append(TraceRecord(cycle, op, address))
        cycle += int(rng.expovariate(1.0 / mean_gap_cycles))
    return records
