"""Trace-driven close-page DRAM controller simulation.

Every access is a full ACT / RD-or-WR / auto-PRE row cycle (close-page
policy). Banks queue FCFS and run in parallel; the shared command bus
serializes command issue at one slot per nanosecond (1 GHz); a rolling
four-activate window throttles ACT bursts; all banks pause for a block of
dummy row cycles every refresh interval.

Time is continuous (float nanoseconds): an isolated request to an idle
bank completes in exactly tRCD + tCAS + tBURST.
"""

import math
from dataclasses import dataclass

from .addrmap import AddressMap
from .energy import (
    BITS_PER_ACCESS,
    EnergyParams,
    PowerBreakdown,
    ROWS_PER_REFRESH_EVENT,
    aggregate_power,
    compute_edp,
)
from .errors import TimingViolation
from .geometry import OrgSpec
from .timing import TimingParams

CMD_SLOT_NS = 1.0   # command/address bus occupancy per command
_EPS = 1e-9


@dataclass(frozen=True)
class MemRequest:
    index: int
    arrival_ns: float
    op: str            # 'R' or 'W'
    address: int
    bank: int
    row: int
    column: int


@dataclass
class BankState:
    """Per-bank scheduling state; phases follow the row-cycle order."""

    phase: str = "precharged"      # precharged|activating|active|precharging
    open_row: int | None = None
    next_act_ns: float = 0.0       # earliest next ACT (tRC and tRP honored)
    busy_until_ns: float = 0.0


class FawWindow:
    """Rolling window: at most four ACTs (any bank) per t_faw span."""

    def __init__(self, t_faw_ns: float):
        self.t_faw_ns = t_faw_ns
        self._acts: list = []

    def earliest(self, t: float) -> float:
        if len(self._acts) == 4 and t < self._acts[0] + self.t_faw_ns:
            return self._acts[0] + self.t_faw_ns
        return t

    def record(self, t: float):
        self._acts.append(t)
        if len(self._acts) > 4:
            self._acts.pop(0)


class _CommandBus:
    """One-slot-per-command bus; greedy earliest-free allocation."""

    def __init__(self):
        self._buckets: dict = {}

    def _conflict_end(self, t: float) -> float:
        end = -1.0
        base = int(t)
        for bkt in (base - 1, base, base + 1):
            for s in self._buckets.get(bkt, ()):
                if s < t + CMD_SLOT_NS - _EPS and s + CMD_SLOT_NS - _EPS > t:
                    if s + CMD_SLOT_NS > end:
                        end = s + CMD_SLOT_NS
        return end

    def probe(self, t: float) -> float:
        while True:
            end = self._conflict_end(t)
            if end < 0.0:
                return t
            t = end

    def reserve(self, t: float) -> float:
        t = self.probe(t)
        self._buckets.setdefault(int(t), []).append(t)
        return t

    def release(self, t: float):
        self._buckets[int(t)].remove(t)


@dataclass
class SimStats:
    org: str
    n_reads: int = 0
    n_writes: int = 0
    n_activates: int = 0
    n_precharges: int = 0
    n_refreshes: int = 0
    sum_latency_ns: float = 0.0
    wall_time_ns: float = 0.0

    @property
    def n_accesses(self) -> int:
        return self.n_reads + self.n_writes

    @property
    def avg_access_latency_ns(self) -> float:
        return self.sum_latency_ns / self.n_accesses if self.n_accesses else 0.0

    @property
    def throughput_bits_per_s(self) -> float:
        if self.wall_time_ns <= 0.0 or not self.n_accesses:
            return 0.0
        return self.n_accesses * BITS_PER_ACCESS / (self.wall_time_ns * 1e-9)

    def as_dict(self) -> dict:
        return {
            "org": self.org,
            "n_reads": self.n_reads,
            "n_writes": self.n_writes,
            "n_activates": self.n_activates,
            "n_precharges": self.n_precharges,
            "n_refreshes": self.n_refreshes,
            "avg_access_latency_ns": self.avg_access_latency_ns,
            "throughput_bits_per_s": self.throughput_bits_per_s,
            "wall_time_ns": self.wall_time_ns,
        }


@dataclass
class SimResult:
    stats: SimStats
    power: PowerBreakdown
    edp_pj_ns_per_bit: float
    command_log: list | None = None   # (time_ns, cmd, bank, row), time-sorted


def decode_requests(trace, spec: OrgSpec) -> list:
    amap = AddressMap.for_org(spec)
    out = []
    for i, rec in enumerate(trace):
        bank, row, col = amap.decode(rec.address)
        out.append(MemRequest(i, float(rec.cycle), rec.op, rec.address,
                              bank, row, col))
    return out


class ClosePageController:
    """Issues one ACT/RW/PRE bundle at a time, oldest feasible first."""

    def __init__(self, spec: OrgSpec, timings: TimingParams,
                 collect_log: bool = False):
        self.spec = spec
        self.t = timings
        self.banks = [BankState() for _ in range(spec.banks)]
        self.queues: list = [[] for _ in range(spec.banks)]
        self._heads = [0] * spec.banks
        self.bus = _CommandBus()
        self.faw = FawWindow(timings.t_faw_ns)
        self.refresh_span_ns = ROWS_PER_REFRESH_EVENT * timings.t_rc_ns
        self.log: list | None = [] if collect_log else None
        self.stats_latency = 0.0
        self.n_issued = 0
        self.last_completion_ns = 0.0
        self.n_reads = 0
        self.n_writes = 0

    # -- refresh geometry ------------------------------------------------

    def _refresh_push(self, t: float, span: float) -> float:
        """Earliest start >= t whose [t, t+span) avoids all refresh blocks."""
        t_refi = self.t.t_refi_ns
        while True:
            k_lo = max(1, int((t - self.refresh_span_ns) // t_refi))
            k_hi = int((t + span) // t_refi) + 1
            moved = False
            for k in range(k_lo, k_hi + 1):
                ws = k * t_refi
                if ws < t + span and ws + self.refresh_span_ns > t + _EPS:
                    t = ws + self.refresh_span_ns
                    moved = True
            if not moved:
                return t

    # -- scheduling ------------------------------------------------------

    def enqueue(self, requests):
        for req in requests:
            self.queues[req.bank].append(req)

    def _candidate(self, bank: int) -> float:
        req = self.queues[bank][self._heads[bank]]
        t = max(req.arrival_ns, self.banks[bank].next_act_ns)
        for _ in range(64):
            t0 = t
            t = self.faw.earliest(t)
            t = self._refresh_push(t, self.t.t_rc_ns)
            t = self.bus.probe(t)
            if t == t0:
                return t
        raise TimingViolation(f"bank {bank}: ACT candidate did not stabilize")

    def pending_banks(self):
        return [b for b in range(self.spec.banks)
                if self._heads[b] < len(self.queues[b])]

    def step(self):
        """Issue the next feasible bundle; returns the completed request
        and its completion time, or None when all queues are drained."""
        pending = self.pending_banks()
        if not pending:
            return None

        best_bank = -1
        best_t = math.inf
        best_age = math.inf
        for b in pending:
            t = self._candidate(b)
            age = self.queues[b][self._heads[b]].index
            if (t < best_t - _EPS
                    or (abs(t - best_t) <= _EPS and age < best_age)):
                best_bank, best_t, best_age = b, t, age

        b = best_bank
        req = self.queues[b][self._heads[b]]
        t = self.t

        for _ in range(16):
            act = self.bus.reserve(best_t)
            rw = self.bus.reserve(act + t.t_rcd_ns)
            pre = self.bus.reserve(max(act + t.t_ras_ns, rw + t.t_burst_ns))
            # the whole cycle, including the precharge tail, must clear
            # every refresh block; rarely a delayed RW/PRE slips into one
            span_end = pre + t.t_rp_ns
            pushed = self._refresh_push(act, span_end - act)
            if pushed == act:
                break
            self.bus.release(act)
            self.bus.release(rw)
            self.bus.release(pre)
            best_t = pushed
        else:
            raise TimingViolation(f"bank {b}: bundle would not clear refresh")

        if rw < act + t.t_rcd_ns - _EPS:
            raise TimingViolation("RW issued before tRCD elapsed")
        if pre < act + t.t_ras_ns - _EPS:
            raise TimingViolation("PRE issued before tRAS elapsed")
        if act < self.banks[b].next_act_ns - _EPS:
            raise TimingViolation("ACT issued before bank ready")

        self.faw.record(act)
        bank = self.banks[b]
        bank.phase = "precharged"
        bank.open_row = None
        bank.next_act_ns = max(act + t.t_rc_ns, pre + t.t_rp_ns)
        bank.busy_until_ns = bank.next_act_ns

        if req.op == "R":
            completion = rw + t.t_cas_ns + t.t_burst_ns
            self.n_reads += 1
        else:
            completion = rw + t.t_burst_ns
            self.n_writes += 1
        self.stats_latency += completion - req.arrival_ns
        self.last_completion_ns = max(self.last_completion_ns, completion)
        self.n_issued += 1
        self._heads[b] += 1

        if self.log is not None:
            self.log.append((act, "ACT", b, req.row))
            self.log.append((rw, "RD" if req.op == "R" else "WR", b, req.row))
            self.log.append((pre, "PRE", b, req.row))
        return req, completion


def run_simulation(trace, spec: OrgSpec, timings: TimingParams,
                   energies: EnergyParams, horizon_ns: float = 0.0,
                   collect_log: bool = False) -> SimResult:
    """Deterministic replay of a trace; latency counts queueing time.

    `horizon_ns` extends the accounted wall time beyond the last
    completion (for idle-window studies); refresh events are charged for
    every interval boundary inside the wall time.
    """
    requests = decode_requests(trace, spec)
    ctrl = ClosePageController(spec, timings, collect_log=collect_log)
    ctrl.enqueue(requests)
    while ctrl.step() is not None:
        pass

    wall = max(ctrl.last_completion_ns, horizon_ns)
    n_ref = int(wall // timings.t_refi_ns) if wall > 0.0 else 0

    stats = SimStats(
        org=spec.name,
        n_reads=ctrl.n_reads,
        n_writes=ctrl.n_writes,
        n_activates=ctrl.n_issued,
        n_precharges=ctrl.n_issued,
        n_refreshes=n_ref,
        sum_latency_ns=ctrl.stats_latency,
        wall_time_ns=wall,
    )

    power = aggregate_power(stats.n_activates, stats.n_reads, stats.n_writes,
                            stats.n_refreshes, energies, wall) \
        if wall > 0.0 else PowerBreakdown(energies.p_background_w, 0.0, 0.0, 0.0)

    edp = 0.0
    if stats.n_accesses:
        edp = compute_edp(power, stats.throughput_bits_per_s,
                          stats.avg_access_latency_ns)

    log = None
    if collect_log:
        log = list(ctrl.log)
        for k in range(1, n_ref + 1):
            log.append((k * timings.t_refi_ns, "REF", -1, 0))
        log.sort(key=lambda e: (e[0], e[1], e[2]))
    return SimResult(stats=stats, power=power, edp_pj_ns_per_bit=edp,
                     command_log=log)
