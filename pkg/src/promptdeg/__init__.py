"""promptdeg: blind-SR image degradation with binned text-prompt annotations.

Synthesizes HR/LR training pairs under a five-stage parameterized degradation
model, renders each realization as a discretized natural-language prompt, and
estimates such prompts back from degraded images with classical features.
"""

__version__ = "0.1.0"

from .degradation import (
    DegradationConfig,
    DegradationSpec,
    SpecRecordError,
    apply,
    record_to_spec,
    sample_spec,
    spec_to_record,
)
from .kernels import backend_name
from .prompts import (
    Direction,
    Level,
    PromptBins,
    PromptFormat,
    PromptParseError,
    bins_from_spec,
    parse,
    render,
)

__all__ = [
    "DegradationConfig",
    "DegradationSpec",
    "Direction",
    "Level",
    "PromptBins",
    "PromptFormat",
    "PromptParseError",
    "SpecRecordError",
    "apply",
    "backend_name",
    "bins_from_spec",
    "parse",
    "record_to_spec",
    "render",
    "sample_spec",
    "spec_to_record",
    "__version__",
]
