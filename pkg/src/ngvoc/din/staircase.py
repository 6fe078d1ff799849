"""Adaptive staircase for the digits-in-noise test and the speech reception
threshold computed from it.

Direction convention: a fully correct answer makes the next presentation
harder (SNR down one step), an error makes it easier. ``correct_decreases``
exists as an explicit switch for the opposite convention, but the default
follows standard digits-in-noise practice, which is the only direction
consistent with negative reception thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class StaircaseConfig:
    start_snr: float = 0.0
    step_db: float = 2.0
    min_snr: float = -20.0
    max_snr: float = 10.0
    n_trials: int = 24
    correct_decreases: bool = True


@dataclass(frozen=True)
class StaircaseState:
    config: StaircaseConfig
    current_snr: float
    snr_history: tuple[float, ...] = ()
    response_history: tuple[bool, ...] = ()

    def __post_init__(self):
        if not self.config.min_snr <= self.current_snr <= self.config.max_snr:
            raise ValueError("current SNR outside the staircase bounds")
        if len(self.snr_history) != len(self.response_history):
            raise ValueError("history lengths must match")

    @property
    def trial_index(self) -> int:
        return len(self.response_history)

    @property
    def complete(self) -> bool:
        return self.trial_index >= self.config.n_trials


def new_staircase(config: StaircaseConfig | None = None) -> StaircaseState:
    config = config or StaircaseConfig()
    return StaircaseState(config, config.start_snr)


def _step(config: StaircaseConfig, snr: float, correct: bool) -> float:
    sign = -1.0 if (correct == config.correct_decreases) else 1.0
    return min(max(snr + sign * config.step_db, config.min_snr), config.max_snr)


def staircase_next(state: StaircaseState, correct: bool) -> StaircaseState:
    """Record the response to the current presentation and move the SNR
    one step, clamped to the bounds."""
    if state.complete:
        raise ValueError("staircase already has all its scored presentations")
    return replace(
        state,
        current_snr=_step(state.config, state.current_snr, correct),
        snr_history=state.snr_history + (state.current_snr,),
        response_history=state.response_history + (correct,),
    )


def compute_srt(state: StaircaseState) -> float:
    """Average SNR of presentations 5 through 25.

    Presentation 25 is hypothetical: the level that would have followed the
    final response. With 24 scored presentations that leaves 21 values.
    """
    if not state.complete:
        raise ValueError(
            f"need {state.config.n_trials} scored presentations, have {state.trial_index}"
        )
    levels = list(state.snr_history)
    levels.append(_step(state.config, levels[-1], state.response_history[-1]))
    tail = levels[4:]
    return sum(tail) / len(tail)


def score_response(presented: str, answered: str) -> bool:
    """All three digits must match, in order."""
    presented = str(presented)
    answered = str(answered)
    if len(presented) != 3 or not presented.isdigit():
        raise ValueError(f"presented triplet must be 3 digits, got {presented!r}")
    if len(answered) != 3 or not answered.isdigit():
        raise ValueError(f"answer must be exactly 3 digits, got {answered!r}")
    return presented == answered
