"""JSON Schemas for the reports written by the command-line interface."""

from __future__ import annotations

import jsonschema

_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_prob = {"type": "number", "minimum": 0, "maximum": 1}
_count = {"type": "integer", "minimum": 0}


def _envelope(command: str, results: dict) -> dict:
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "required": ["command", "config", "results", "warnings"],
        "additionalProperties": False,
        "properties": {
            "command": {"const": command},
            "config": {"type": "object"},
            "results": results,
            "warnings": {"type": "array", "items": {"type": "string"}},
        },
    }


HEATMAP = _envelope(
    "heatmap",
    {
        "type": "object",
        "required": ["cells", "improvement_fraction"],
        "properties": {
            "improvement_fraction": _prob,
            "cells": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["g", "h", "crps_base", "crps_calibrated"],
                    "additionalProperties": False,
                    "properties": {
                        "g": {"type": "number", "exclusiveMinimum": 0},
                        "h": {"type": "number", "exclusiveMinimum": 0},
                        "crps_base": _nonneg,
                        "crps_calibrated": _nonneg,
                        "crps_cross": _nonneg,
                    },
                },
            },
        },
    },
)

PROP1 = _envelope(
    "prop1",
    {
        "type": "array",
        "items": {
            "type": "object",
            "required": [
                "n", "replications", "max_sup_discrepancy", "bound", "bound_failures", "pass",
                "median_scaled_ks", "kolmogorov_median", "median_gap",
            ],
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "replications": {"type": "integer", "minimum": 1},
                "max_sup_discrepancy": _nonneg,
                "bound": _prob,
                "bound_failures": _count,
                "pass": {"type": "boolean"},
                "median_scaled_ks": _nonneg,
                "kolmogorov_median": _nonneg,
                "median_gap": _nonneg,
            },
        },
    },
)

SEMIONLINE = _envelope(
    "semionline",
    {
        "type": "object",
        "required": ["runs", "passed", "replications"],
        "properties": {
            "passed": _count,
            "replications": {"type": "integer", "minimum": 1},
            "runs": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["seed", "ks", "p_value", "pass", "pits"],
                    "properties": {
                        "seed": {"type": "integer"},
                        "ks": _prob,
                        "p_value": _prob,
                        "pass": {"type": "boolean"},
                        "pits": {"type": "array", "items": _prob},
                    },
                },
            },
        },
    },
)

DEMO_NONIID = _envelope(
    "demo-noniid",
    {
        "type": "array",
        "items": {
            "type": "object",
            "required": [
                "n_calib", "crps_oracle", "crps_miscalibrated", "crps_conformalized",
                "crps_conformalized_oracle", "ratio_conformalized_to_oracle", "ratio_miscalibrated_to_oracle",
            ],
            "properties": {
                "n_calib": _count,
                "crps_oracle": _nonneg,
                "crps_miscalibrated": _nonneg,
                "crps_conformalized": _nonneg,
                "crps_conformalized_oracle": _nonneg,
                "ratio_conformalized_to_oracle": _nonneg,
                "ratio_miscalibrated_to_oracle": _nonneg,
            },
        },
    },
)

SCHEMAS = {"heatmap": HEATMAP, "prop1": PROP1, "semionline": SEMIONLINE, "demo-noniid": DEMO_NONIID}


def validate_report(report: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``report`` does not match its command's schema."""
    jsonschema.validate(report, SCHEMAS[report["command"]])
