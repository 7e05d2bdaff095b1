"""Focal-zone MDP: window state, four actions, and a clamped transition."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

from .exceptions import ValidationError


class FocalState(NamedTuple):
    """Half-open window ``[start, end)`` on the expanded vector."""

    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start


class Action(IntEnum):
    LEFT_SHIFT = 0
    RIGHT_SHIFT = 1
    EXTEND = 2
    CONDENSE = 3


@dataclass(frozen=True)
class EnvParams:
    K_prime: int
    L_min: int = 10
    shift_step: int = 4
    resize_step: int = 4

    def validate(self, ar_order: int | None = None):
        if self.shift_step < 1 or self.resize_step < 1:
            raise ValidationError("shift_step and resize_step must be >= 1")
        if self.L_min < 1 or self.L_min > self.K_prime:
            raise ValidationError(f"L_min={self.L_min} must lie in [1, K'={self.K_prime}]")
        if ar_order is not None and self.L_min < 2 * ar_order + 2:
            raise ValidationError(
                f"L_min={self.L_min} is below 2p+2={2 * ar_order + 2} for AR order {ar_order}"
            )


def is_valid(s: FocalState, params: EnvParams) -> bool:
    return 0 <= s.start < s.end <= params.K_prime and s.end - s.start >= params.L_min


def initial_state(K_prime: int, length: int, L_min: int = 10) -> FocalState:
    """Centred window of the given length."""
    if not L_min <= length <= K_prime:
        raise ValidationError(f"initial length {length} must lie in [{L_min}, {K_prime}]")
    start = (K_prime - length) // 2
    return FocalState(start, start + length)


def step(s: FocalState, a: Action, params: EnvParams) -> FocalState:
    """Apply one action; the result is always a valid state."""
    start, end = s
    K = params.K_prime
    a = Action(a)
    if a is Action.LEFT_SHIFT:
        d = min(params.shift_step, start)
        return FocalState(start - d, end - d)
    if a is Action.RIGHT_SHIFT:
        d = min(params.shift_step, K - end)
        return FocalState(start + d, end + d)
    if a is Action.EXTEND:
        return FocalState(max(0, start - params.resize_step), min(K, end + params.resize_step))
    new_start, new_end = start + params.resize_step, end - params.resize_step
    if new_end - new_start >= params.L_min:
        return FocalState(new_start, new_end)
    # too short: L_min window centred on the old midpoint, pushed back inside
    new_start = (start + end - params.L_min) // 2
    new_start = min(max(new_start, 0), K - params.L_min)
    return FocalState(new_start, new_start + params.L_min)
