"""Period-doubling analysis and feedforward ramp design for buck converters."""

from .errors import *  # noqa: F401,F403
from .xfer import (
    ConverterConfig,
    FeedforwardRamp,
    FixedRamp,
    Mode,
    RationalFunction,
    buck_output_filter,
    current_sense_tf,
    evaluate,
    open_loop_tf,
)

__version__ = "0.1.0"
