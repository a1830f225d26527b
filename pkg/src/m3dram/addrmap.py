"""Physical address layout shared by the trace tools and the simulator.

Bit slicing, LSB to MSB: [line offset | column | bank | row]. Bank bits
sit below the row bits so that a sequential stream walks all banks before
reopening a row, spreading load across the bank set.
"""

from dataclasses import dataclass

from .geometry import OrgSpec

LINE_BYTES = 64


def _log2_exact(n: int, what: str) -> int:
    bits = n.bit_length() - 1
    if n <= 0 or (1 << bits) != n:
        raise ValueError(f"{what} must be a power of two, got {n}")
    return bits


@dataclass(frozen=True)
class AddressMap:
    offset_bits: int
    column_bits: int
    bank_bits: int
    row_bits: int

    @classmethod
    def for_org(cls, spec: OrgSpec) -> "AddressMap":
        row_bytes = spec.page_size_bits // 8
        return cls(
            offset_bits=_log2_exact(LINE_BYTES, "line size"),
            column_bits=_log2_exact(row_bytes // LINE_BYTES, "lines per row"),
            bank_bits=_log2_exact(spec.banks, "banks"),
            row_bits=_log2_exact(spec.rows_per_bank, "rows per bank"),
        )

    @property
    def total_bytes(self) -> int:
        return 1 << (self.offset_bits + self.column_bits
                     + self.bank_bits + self.row_bits)

    def decode(self, address: int) -> tuple:
        """address -> (bank, row, column)."""
        col = (address >> self.offset_bits) & ((1 << self.column_bits) - 1)
        bank = (address >> (self.offset_bits + self.column_bits)) \
            & ((1 << self.bank_bits) - 1)
        row = (address >> (self.offset_bits + self.column_bits
                           + self.bank_bits)) & ((1 << self.row_bits) - 1)
        return bank, row, col

    def encode(self, bank: int, row: int, column: int) -> int:
        return (
            (row << (self.offset_bits + self.column_bits + self.bank_bits))
            | (bank << (self.offset_bits + self.column_bits))
            | (column << self.offset_bits)
        )


def decode_address(address: int, spec: OrgSpec) -> tuple:
    return AddressMap.for_org(spec).decode(address)
