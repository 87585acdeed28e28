"""Versioned JSON schemas for every interchange document.

All cross-component traffic (tables, networks, assignments, cost models,
plans, verification reports) is plain JSON validated against these shapes,
so external tools interoperate without shared code.
"""

from __future__ import annotations

import jsonschema

_RATIONAL = {
    "type": "object",
    "properties": {
        "num": {"type": "integer"},
        "den": {"type": "integer", "exclusiveMinimum": 0},
    },
    "required": ["num", "den"],
}

_PROFILE = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "port_small": {"type": "integer", "exclusiveMinimum": 0},
        "port_large": {"type": "integer", "exclusiveMinimum": 0},
        "accumulator": {"type": "integer", "exclusiveMinimum": 0},
    },
    "required": ["name", "port_small", "port_large", "accumulator"],
}

_LUT_ENTRY = {
    "type": "object",
    "properties": {
        "w_b": {"type": "integer", "minimum": 1},
        "a_b": {"type": "integer", "minimum": 1},
        "strategy": {"enum": ["kernel", "filter"]},
        "params": {"type": "object"},
        "t_mul": _RATIONAL,
        "e_g": {"type": "integer", "minimum": 0},
        "overpacked": {"type": "boolean"},
        "separated": {"type": "boolean"},
    },
    "required": ["w_b", "a_b", "strategy", "params", "t_mul", "e_g",
                 "overpacked", "separated"],
}

LUT_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"type": "integer"},
        "profile": _PROFILE,
        "kernel_shape": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 2,
            "maxItems": 2,
        },
        "seq_len_policy": {
            "anyOf": [{"const": "generic"}, {"type": "integer", "minimum": 1}],
        },
        "signedness": {"enum": ["unsigned", "signed"]},
        "bits_range": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 2,
            "maxItems": 2,
        },
        "entries": {"type": "array", "items": _LUT_ENTRY, "minItems": 1},
    },
    "required": ["version", "profile", "kernel_shape", "seq_len_policy",
                 "signedness", "bits_range", "entries"],
}

_LAYER = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "op_kind": {"enum": ["conv", "depthwise_conv", "pointwise_conv",
                             "fully_connected"]},
        "c_in": {"type": "integer", "minimum": 1},
        "c_out": {"type": "integer", "minimum": 1},
        "k_h": {"type": "integer", "minimum": 1},
        "k_w": {"type": "integer", "minimum": 1},
        "h_out": {"type": "integer", "minimum": 1},
        "w_out": {"type": "integer", "minimum": 1},
        "groups": {"type": "integer", "minimum": 1},
        "frozen_bits": {
            "type": "object",
            "properties": {
                "w_b": {"type": "integer", "minimum": 1},
                "a_b": {"type": "integer", "minimum": 1},
            },
            "required": ["w_b", "a_b"],
        },
    },
    "required": ["name", "op_kind", "c_in", "c_out", "k_h", "k_w",
                 "h_out", "w_out", "groups"],
}

NET_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"type": "integer"},
        "layers": {"type": "array", "items": _LAYER, "minItems": 1},
    },
    "required": ["version", "layers"],
}

ASSIGN_SCHEMA = {
    "type": "object",
    "patternProperties": {
        ".*": {
            "type": "object",
            "properties": {
                "w_b": {"type": "integer", "minimum": 1},
                "a_b": {"type": "integer", "minimum": 1},
            },
            "required": ["w_b", "a_b"],
        },
    },
}

_TARGET_MODEL = {
    "type": "object",
    "properties": {
        "coefficients": {"type": "array", "items": {"type": "number"}},
        "noise_precision": {"type": "number", "exclusiveMinimum": 0},
        "weight_precision": {"type": "number", "exclusiveMinimum": 0},
        "normalization": {
            "type": "object",
            "properties": {
                "mean": {"type": "array", "items": {"type": "number"}},
                "std": {"type": "array", "items": {"type": "number"}},
            },
            "required": ["mean", "std"],
        },
    },
    "required": ["coefficients", "noise_precision", "weight_precision",
                 "normalization"],
}

MODEL_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"type": "integer"},
        "feature_map_id": {"type": "string"},
        "targets": {
            "type": "object",
            "properties": {
                "dsp": _TARGET_MODEL,
                "lut": _TARGET_MODEL,
                "wns": _TARGET_MODEL,
            },
            "required": ["dsp", "lut", "wns"],
        },
    },
    "required": ["version", "feature_map_id", "targets"],
}

GEN_SPEC_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"type": "integer"},
        "n_samples": {"type": "integer", "minimum": 2},
        "ranges": {"type": "object"},
        "targets": {
            "type": "object",
            "properties": {
                "dsp": {"type": "object"},
                "lut": {"type": "object"},
                "wns": {"type": "object"},
            },
            "required": ["dsp", "lut", "wns"],
        },
    },
    "required": ["version", "n_samples", "ranges", "targets"],
}

PLAN_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"type": "integer"},
        "feasible": {"type": "boolean"},
        "latency": {"anyOf": [_RATIONAL, {"type": "null"}]},
        "stages": {"type": "array"},
        "totals": {"type": "object"},
        "budgets": {"type": "object"},
        "reason": {"anyOf": [{"type": "string"}, {"type": "null"}]},
    },
    "required": ["version", "feasible", "latency", "stages", "totals",
                 "budgets"],
}

REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"type": "integer"},
        "table": {"type": "object"},
        "results": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "choice": {"type": "object"},
                    "mode": {"enum": ["exhaustive", "sampled"]},
                    "trials": {"type": "integer", "minimum": 0},
                    "mismatches": {"type": "integer", "minimum": 0},
                    "acc_budget_exercised": {"type": "integer", "minimum": 0},
                    "acc_trials": {"type": "integer", "minimum": 0},
                },
                "required": ["choice", "mode", "trials", "mismatches"],
            },
        },
        "total_mismatches": {"type": "integer", "minimum": 0},
    },
    "required": ["version", "results", "total_mismatches"],
}

CHOICE_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"type": "integer"},
        "profile": _PROFILE,
        "kernel_shape": {"type": "array"},
        "seq_len_policy": {},
        "signedness": {"enum": ["unsigned", "signed"]},
        "choice": _LUT_ENTRY,
    },
    "required": ["version", "profile", "choice"],
}

OPS_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"type": "integer"},
        "layers": {"type": "array"},
        "op_dsp": _RATIONAL,
        "op_mul_total": {"type": "integer", "minimum": 0},
    },
    "required": ["version", "layers", "op_dsp", "op_mul_total"],
}

_SCHEMAS = {
    "lut": LUT_SCHEMA,
    "net": NET_SCHEMA,
    "assign": ASSIGN_SCHEMA,
    "model": MODEL_SCHEMA,
    "gen_spec": GEN_SPEC_SCHEMA,
    "plan": PLAN_SCHEMA,
    "report": REPORT_SCHEMA,
    "choice": CHOICE_SCHEMA,
    "ops": OPS_SCHEMA,
}


class SchemaError(ValueError):
    pass


def validate_document(doc, kind: str) -> None:
    """Validate a document against its named schema; raise SchemaError."""
    try:
        jsonschema.validate(doc, _SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{kind} document invalid: {exc.message}") from exc
