"""Multiplier primitive descriptions.

A profile captures the only three numbers the packing math needs about a
hard multiplier block: the two input-port widths and the accumulator width.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

DEFAULT_PROFILE_ENV = "DSPPACK_PROFILE"


@dataclass(frozen=True)
class DspProfile:
    """A fixed-width multiply-accumulate primitive.

    ``port_small``/``port_large`` are the two input-port widths (the larger
    port is at least as wide as the smaller), ``accumulator`` bounds every
    wide value a simulation may hold.
    """

    name: str
    port_small: int
    port_large: int
    accumulator: int

    def __post_init__(self):
        if not (0 < self.port_small <= self.port_large):
            raise ValueError(
                f"ports must satisfy 0 < small <= large, got "
                f"{self.port_small}/{self.port_large}"
            )
        if self.accumulator < self.port_small + self.port_large:
            raise ValueError(
                f"accumulator ({self.accumulator}) narrower than a full "
                f"product ({self.port_small + self.port_large})"
            )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "port_small": self.port_small,
            "port_large": self.port_large,
            "accumulator": self.accumulator,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DspProfile":
        return cls(
            name=doc["name"],
            port_small=doc["port_small"],
            port_large=doc["port_large"],
            accumulator=doc["accumulator"],
        )


# The 27 x 18 two's-complement multiplier with 48-bit accumulator that ships
# on UltraScale-class devices.
DSP48E2 = DspProfile("dsp48e2", port_small=18, port_large=27, accumulator=48)

BUILTIN_PROFILES = {
    "dsp48e2": DSP48E2,
}


def load_profile(spec: str | None = None) -> DspProfile:
    """Resolve a profile from a built-in name or a JSON file path.

    With no argument, honors the ``DSPPACK_PROFILE`` environment variable and
    finally falls back to the built-in ``dsp48e2``.
    """
    if spec is None:
        spec = os.environ.get(DEFAULT_PROFILE_ENV, "dsp48e2")
    if spec in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[spec]
    if os.path.exists(spec):
        with open(spec) as fh:
            return DspProfile.from_dict(json.load(fh))
    raise ValueError(f"unknown profile {spec!r} (not a built-in name or file)")
