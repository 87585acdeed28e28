"""dsppack: packing low-bit-width multiplications into fixed-width DSP blocks.

Finds optimal packings per bit-width pair, proves them bit-exact by
simulation, builds throughput lookup tables, evaluates network DSP-operation
counts, and allocates pipeline resources by dynamic programming over a
regression cost model.
"""

from .packing import (
    FilterPackingConfig,
    KernelPackingConfig,
    NoValidConfigError,
    PackingChoice,
    enumerate_configs,
    extra_guard_bits,
    separate_operand,
    throughput,
    validate_filter,
    validate_kernel,
)
from .profiles import DSP48E2, DspProfile, load_profile
from .simulate import (
    DecodedLanes,
    PackedWord,
    SamplePolicy,
    decode,
    encode,
    overpack_correct,
    simulate_filter,
    simulate_kernel,
    simulate_packed_sum,
    verify_choice,
)

__version__ = "0.1.0"

__all__ = [
    "DSP48E2",
    "DspProfile",
    "DecodedLanes",
    "FilterPackingConfig",
    "KernelPackingConfig",
    "NoValidConfigError",
    "PackedWord",
    "PackingChoice",
    "SamplePolicy",
    "decode",
    "encode",
    "enumerate_configs",
    "extra_guard_bits",
    "load_profile",
    "overpack_correct",
    "separate_operand",
    "simulate_filter",
    "simulate_kernel",
    "simulate_packed_sum",
    "throughput",
    "validate_filter",
    "validate_kernel",
    "verify_choice",
]
