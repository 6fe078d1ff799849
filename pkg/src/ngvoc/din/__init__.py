from ngvoc.din.staircase import (
    StaircaseConfig,
    StaircaseState,
    compute_srt,
    new_staircase,
    score_response,
    staircase_next,
)

__all__ = [
    "StaircaseConfig",
    "StaircaseState",
    "compute_srt",
    "new_staircase",
    "score_response",
    "staircase_next",
]
