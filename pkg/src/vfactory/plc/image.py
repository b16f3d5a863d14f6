"""Modbus-visible register image of one PLC.

Four fixed-size tables; addresses outside a table are absent and reads
or writes against them fail with the protocol's illegal-address code.
Input registers and discrete inputs are written only by the sensor
binding step; coils and holding registers accept remote writes.
"""

from __future__ import annotations


class IllegalAddress(Exception):
    pass


class IllegalValue(Exception):
    pass


class RegisterImage:
    __slots__ = ("discrete_inputs", "coils", "input_registers", "holding_registers",
                 "holding_writable")

    def __init__(self, n_discrete: int, n_coils: int, n_input: int, n_holding: int,
                 holding_writable: list[bool] | None = None):
        self.discrete_inputs = [0] * n_discrete
        self.coils = [0] * n_coils
        self.input_registers = [0] * n_input
        self.holding_registers = [0] * n_holding
        self.holding_writable = holding_writable or [True] * n_holding

    def read_bits(self, area: str, address: int, quantity: int) -> list[int]:
        table = self.coils if area == "coils" else self.discrete_inputs
        if address < 0 or quantity < 1 or address + quantity > len(table):
            raise IllegalAddress(f"{area}[{address}..{address + quantity - 1}]")
        return table[address : address + quantity]

    def read_words(self, area: str, address: int, quantity: int) -> list[int]:
        table = self.holding_registers if area == "holding" else self.input_registers
        if address < 0 or quantity < 1 or address + quantity > len(table):
            raise IllegalAddress(f"{area}[{address}..{address + quantity - 1}]")
        return table[address : address + quantity]

    def write_coil(self, address: int, value: int) -> None:
        if address < 0 or address >= len(self.coils):
            raise IllegalAddress(f"coils[{address}]")
        self.coils[address] = 1 if value else 0

    def write_holding(self, address: int, value: int) -> None:
        if address < 0 or address >= len(self.holding_registers):
            raise IllegalAddress(f"holding[{address}]")
        if not self.holding_writable[address]:
            raise IllegalAddress(f"holding[{address}] read-only")
        if not 0 <= value <= 0xFFFF:
            raise IllegalValue(f"value {value}")
        self.holding_registers[address] = value

    def digest_parts(self) -> list[str]:
        return [
            "di=" + ",".join(map(str, self.discrete_inputs)),
            "co=" + ",".join(map(str, self.coils)),
            "ir=" + ",".join(map(str, self.input_registers)),
            "hr=" + ",".join(map(str, self.holding_registers)),
        ]
