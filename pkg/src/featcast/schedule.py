"""Which sampler steps run the network and which are forecast from cache."""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import NamedTuple


class Decision(NamedTuple):
    full: bool
    offset_k: int = 0

    def __str__(self) -> str:
        return "F" if self.full else f"P{self.offset_k}"


FULL = Decision(True, 0)


@dataclass(frozen=True)
class ActivationSchedule:
    """Per-step decisions, indexed from the first (noisiest) sampler step."""

    total_steps: int
    interval_n: int
    decisions: tuple[Decision, ...]
    tail_dense: int = 0

    @property
    def full_steps(self) -> int:
        return sum(d.full for d in self.decisions)

    @property
    def predicted_steps(self) -> int:
        return self.total_steps - self.full_steps

    def trace(self) -> str:
        return ",".join(str(d) for d in self.decisions)

    @classmethod
    def from_trace(cls, trace: str, interval_n: int, tail_dense: int = 0) -> "ActivationSchedule":
        decisions = []
        for tok in trace.split(","):
            tok = tok.strip()
            if tok == "F":
                decisions.append(FULL)
            elif tok.startswith("P") and tok[1:].isdigit() and int(tok[1:]) >= 1:
                decisions.append(Decision(False, int(tok[1:])))
            else:
                raise ValueError(f"bad decision token {tok!r}")
        sched = cls(len(decisions), interval_n, tuple(decisions), tail_dense)
        sched.validate()
        return sched

    def validate(self) -> None:
        if len(self.decisions) != self.total_steps:
            raise ValueError("decision count does not match total_steps")
        if not self.decisions or not self.decisions[0].full:
            raise ValueError("first step must be a full activation")
        expected = 0
        for i, d in enumerate(self.decisions):
            expected = 0 if d.full else expected + 1
            if not d.full and d.offset_k != expected:
                raise ValueError(f"step {i}: offset {d.offset_k}, expected {expected}")


def build_uniform(total_steps: int, interval_n: int, tail_dense: int = 0) -> ActivationSchedule:
    """Full activations every ``interval_n`` steps; the last ``tail_dense`` forced full."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if interval_n < 1:
        raise ValueError(f"interval_n must be >= 1, got {interval_n}")
    if not 0 <= tail_dense < total_steps:
        raise ValueError(f"tail_dense must be in [0, {total_steps}), got {tail_dense}")
    head = total_steps - tail_dense
    decisions = [
        FULL if i % interval_n == 0 else Decision(False, i % interval_n) for i in range(head)
    ]
    decisions += [FULL] * tail_dense
    return ActivationSchedule(total_steps, interval_n, tuple(decisions), tail_dense)


def expected_full_count(total_steps: int, interval_n: int, tail_dense: int = 0) -> int:
    return ceil((total_steps - tail_dense) / interval_n) + tail_dense


def theoretical_speedup(schedule: ActivationSchedule) -> float:
    """Step count over full-activation count; ignores the cost of forecasting."""
    return schedule.total_steps / schedule.full_steps
