"""Python bindings for the jigsaw environment engine."""

import json

from ._core import (
    WIRE_VERSION,
    Episode,
    JigsawError,
    Server,
    __version__,
    canonical_program,
    check_config,
    check_program,
    default_config,
    gradient_check,
    group_advantages,
    label_name,
    min_swap_distance,
    parse_answer,
    replay,
    run_agent,
    sample_with_fixed_points,
    swap_plan,
    total_reward,
)


def trajectory(episode):
    """The episode's trajectory as a plain dict."""
    return json.loads(episode.trajectory_json())


__all__ = [
    "WIRE_VERSION",
    "Episode",
    "JigsawError",
    "Server",
    "__version__",
    "canonical_program",
    "check_config",
    "check_program",
    "default_config",
    "gradient_check",
    "group_advantages",
    "label_name",
    "min_swap_distance",
    "parse_answer",
    "replay",
    "run_agent",
    "sample_with_fixed_points",
    "swap_plan",
    "total_reward",
    "trajectory",
]
