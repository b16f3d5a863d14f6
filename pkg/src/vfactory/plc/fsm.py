"""Table-driven finite state machines for PLC control logic.

A program is a named-state machine with a transition table; every guard
is a predicate over the current input image, the parameter table and
program-internal counters (tick counts, never wall-clock). One scan
advances at most one transition chain until quiescent.
"""

from __future__ import annotations

from typing import Callable

Guard = Callable[[], bool]
# actions may return a state name to override the rule's next_state
Action = Callable[[], "str | None"]
Rule = tuple[Guard, str, Action | None]


class ControlProgram:
    """Base scan loop; subclasses define STATES, a table and emitters."""

    STATES: tuple[str, ...] = ()
    plc_id = ""

    def __init__(self, tick_ms: int):
        self.tick_ms = tick_ms
        self.state = self.STATES[0]
        self.ticks_in_state = 0
        self.inp: dict[str, int] = {}
        self._prev_inp: dict[str, int] = {}
        self._out: dict = {}
        self._table: dict[str, list[Rule]] = {}
        self._param_reader: Callable[[str], int] = lambda name: 0
        self.diagnostics: list[tuple[int, str]] = []
        self._tick = 0

    # populated by the runtime before the first scan
    def bind(self, param_reader: Callable[[str], int]) -> None:
        self._param_reader = param_reader

    def param(self, name: str) -> int:
        return self._param_reader(name)

    def rising(self, name: str) -> bool:
        return bool(self.inp.get(name)) and not bool(self._prev_inp.get(name))

    def diag(self, message: str) -> None:
        self.diagnostics.append((self._tick, message))

    def pre(self) -> None:
        """Per-scan bookkeeping before transitions (latches, timers)."""

    def emit(self, out: dict) -> None:
        """Write this scan's outputs for the current state."""
        raise NotImplementedError

    def scan(self, tick: int, inputs: dict[str, int]) -> dict:
        self._tick = tick
        self._prev_inp = self.inp
        self.inp = inputs
        self.ticks_in_state += 1
        self.pre()
        for _ in range(len(self.STATES) + 1):
            rules = self._table.get(self.state, ())
            for guard, nxt, action in rules:
                if guard():
                    override = action() if action is not None else None
                    target = override or nxt
                    if target != self.state:
                        self.state = target
                        self.ticks_in_state = 0
                    break
            else:
                break
            if self.ticks_in_state != 0:
                break  # self-transition: do not chain further
        else:
            self.diag(f"transition chain did not quiesce in state {self.state}")
        out = self._out
        out.clear()
        self.emit(out)
        return out


def drive(out: dict, current: int, target: int, rate: int, fwd: str, back: str) -> bool:
    """Command an axis toward ``target``; True once within one step."""
    if abs(current - target) < rate:
        return True
    out[fwd if current < target else back] = 1
    return False
