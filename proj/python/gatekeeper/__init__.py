"""Python access to the gatekeeper core."""

from ._core import (
    GatekeeperError,
    band,
    decide_access,
    decode_frame,
    encode_frame,
    format_mean_tries,
    generate_scenario,
    normalize_name,
    run_scenario,
    similarity,
    timing_report,
    xor,
)

__all__ = [
    "GatekeeperError",
    "band",
    "decide_access",
    "decode_frame",
    "encode_frame",
    "format_mean_tries",
    "generate_scenario",
    "normalize_name",
    "run_scenario",
    "similarity",
    "timing_report",
    "xor",
]
