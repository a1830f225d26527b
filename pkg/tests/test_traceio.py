import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from m3dram.addrmap import AddressMap
from m3dram.errors import InvalidConfig, OrderViolation, TraceParseError
from m3dram.geometry import OrgSpec
from m3dram.traceio import (
    TraceRecord,
    generate_trace,
    parse_trace,
    read_trace,
    serialize_trace,
    write_trace,
)

SPEC = OrgSpec("ddr4-512", 512, False)


class TestParser:
    def test_single_read(self):
        recs = parse_trace(["0 R 0x0"])
        assert recs == [TraceRecord(0, "R", 0)]

    def test_comments_and_blanks(self):
        recs = parse_trace(["# header", "", "5 W 0x40  # trailing", "   "])
        assert recs == [TraceRecord(5, "W", 0x40)]

    def test_bad_op(self):
        with pytest.raises(TraceParseError) as err:
            parse_trace(["5 X 0x10"])
        assert err.value.line_no == 1
        assert "op" in err.value.reason

    def test_bad_field_count(self):
        with pytest.raises(TraceParseError):
            parse_trace(["5 R"])

    def test_bad_address(self):
        with pytest.raises(TraceParseError):
            parse_trace(["5 R zz"])

    def test_decreasing_cycle(self):
        with pytest.raises(OrderViolation):
            parse_trace(["10 R 0x0", "9 R 0x40"])

    def test_equal_cycles_allowed(self):
        recs = parse_trace(["7 R 0x0", "7 W 0x40"])
        assert len(recs) == 2


@settings(max_examples=50, deadline=None)
@given(st.lists(
    st.tuples(st.integers(0, 1000), st.sampled_from("RW"),
              st.integers(0, 2**40 - 1)),
    max_size=50,
))
def test_round_trip(items):
    cycles = sorted(c for c, _, _ in items)
    records = [TraceRecord(c, op, addr)
               for c, (_, op, addr) in zip(cycles, items)]
    buf = io.StringIO()
    serialize_trace(records, buf)
    assert parse_trace(buf.getvalue().splitlines()) == records


def test_file_round_trip(tmp_path):
    records = generate_trace("mixed", 200, seed=3, spec=SPEC)
    plain = tmp_path / "t.trace"
    gz = tmp_path / "t.trace.gz"
    write_trace(str(plain), records)
    write_trace(str(gz), records)
    assert read_trace(str(plain)) == records
    assert read_trace(str(gz)) == records
    assert gz.read_bytes()[:2] == b"\x1f\x8b"  # actually gzip-compressed


class TestGenerator:
    def test_deterministic(self):
        a = generate_trace("uniform", 8, seed=42, spec=SPEC)
        b = generate_trace("uniform", 8, seed=42, spec=SPEC)
        assert a == b
        c = generate_trace("uniform", 8, seed=43, spec=SPEC)
        assert a != c

    def test_conflict_single_bank_many_rows(self):
        amap = AddressMap.for_org(SPEC)
        decoded = [amap.decode(r.address)
                   for r in generate_trace("conflict", 64, seed=1, spec=SPEC)]
        banks = {b for b, _, _ in decoded}
        rows = {r for _, r, _ in decoded}
        assert banks == {0}
        assert len(rows) > 1

    def test_stream_sequential(self):
        recs = generate_trace("stream", 16, seed=1, spec=SPEC)
        assert [r.address for r in recs] == [64 * i for i in range(16)]

    def test_uniform_bank_spread(self):
        amap = AddressMap.for_org(SPEC)
        recs = generate_trace("uniform", 80_000, seed=7, spec=SPEC)
        counts = [0] * SPEC.banks
        for r in recs:
            counts[amap.decode(r.address)[0]] += 1
        for c in counts:
            assert abs(c - 10_000) / 10_000 < 0.05

    def test_mixed_read_fraction(self):
        recs = generate_trace("mixed", 20_000, seed=5, spec=SPEC)
        reads = sum(1 for r in recs if r.op == "R")
        assert reads / len(recs) == pytest.approx(0.7, abs=0.02)

    def test_cycles_non_decreasing(self):
        for kind in ("uniform", "stream", "conflict", "mixed"):
            recs = generate_trace(kind, 500, seed=9, spec=SPEC)
            assert all(a.cycle <= b.cycle for a, b in zip(recs, recs[1:]))

    def test_rejects_bad_args(self):
        with pytest.raises(InvalidConfig):
            generate_trace("zipf", 10, seed=1, spec=SPEC)
        with pytest.raises(InvalidConfig):
            generate_trace("uniform", 0, seed=1, spec=SPEC)


class TestAddressMap:
    def test_zero(self):
        assert AddressMap.for_org(SPEC).decode(0) == (0, 0, 0)

    def test_bank_bits_below_row_bits(self):
        amap = AddressMap.for_org(SPEC)
        a = amap.encode(bank=0, row=5, column=3)
        b = amap.encode(bank=6, row=5, column=3)
        ba, ra, ca = amap.decode(a)
        bb, rb, cb = amap.decode(b)
        assert (ra, ca) == (rb, cb) == (5, 3)
        assert (ba, bb) == (0, 6)

    def test_sequential_lines_spread_evenly(self):
        amap = AddressMap.for_org(SPEC)
        counts = [0] * SPEC.banks
        for i in range(2**16):
            counts[amap.decode(i * 64)[0]] += 1
        assert counts == [2**13] * SPEC.banks

    def test_encode_decode_inverse(self):
        amap = AddressMap.for_org(SPEC)
        for bank, row, col in [(0, 0, 0), (7, 65535, 31), (3, 1234, 17)]:
            assert amap.decode(amap.encode(bank, row, col)) == (bank, row, col)
