"""Pattern-accelerated mask-based parallel decoding for unit-test code.

A batch of test cases for one focal method is decoded in parallel by
iteratively unmasking a fixed-length token sequence. Because the test
cases share structure, their in-progress code lines can be parsed,
merged at the syntax-tree level, and the shared structure used to commit
extra tokens per step without hurting output validity or diversity.
"""

from patmask.core import (
    BatchState,
    Committed,
    ConfigError,
    InstanceState,
    SchedulerConfig,
    new_batch,
)
from patmask.scheduler import StepError, decode_step, run
from patmask.sim import SimBackend, Trace, build_trace, load_trace, save_trace

__all__ = [
    "BatchState",
    "Committed",
    "ConfigError",
    "InstanceState",
    "SchedulerConfig",
    "SimBackend",
    "StepError",
    "Trace",
    "build_trace",
    "decode_step",
    "load_trace",
    "new_batch",
    "run",
    "save_trace",
]

__version__ = "0.1.0"
