"""Registered JSON schemas for agent outputs and the parse/validate step."""

from __future__ import annotations

import json
import re

import jsonschema

_NONEMPTY = {"type": "string", "minLength": 1}

SCHEMAS: dict[str, dict] = {
    "code_list": {
        "type": "object",
        "required": ["codes"],
        "properties": {
            "codes": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["name", "description", "quotes"],
                    "properties": {
                        "name": _NONEMPTY,
                        "description": _NONEMPTY,
                        "quotes": _NONEMPTY,
                    },
                },
            },
        },
    },
    "code_grouping": {
        "type": "object",
        "required": ["groups"],
        "properties": {
            "groups": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["label", "code_ids"],
                    "properties": {
                        "label": _NONEMPTY,
                        "code_ids": {
                            "type": "array", "minItems": 1,
                            "items": _NONEMPTY,
                        },
                    },
                },
            },
        },
    },
    "preliminary_themes": {
        "type": "object",
        "required": ["themes"],
        "properties": {
            "themes": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["name", "description"],
                    "properties": {
                        "name": _NONEMPTY,
                        "description": _NONEMPTY,
                        "supporting_code_ids": {"type": "array", "items": _NONEMPTY},
                    },
                },
            },
        },
    },
    "theme_consolidation": {
        "type": "object",
        "required": ["themes"],
        "properties": {
            "themes": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["name", "description"],
                    "properties": {
                        "name": _NONEMPTY,
                        "description": _NONEMPTY,
                        "supporting_code_ids": {"type": "array", "items": _NONEMPTY},
                    },
                },
            },
        },
    },
    "criterion_feedback": {
        "type": "object",
        "required": ["issues"],
        "properties": {
            "issues": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["text"],
                    "properties": {
                        "text": _NONEMPTY,
                        "theme_ids": {"type": "array", "items": _NONEMPTY},
                    },
                },
            },
        },
    },
    "refinement_plan": {
        "type": "object",
        "required": ["actions", "themes"],
        "properties": {
            "actions": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["kind", "source_theme_ids", "result_theme_ids"],
                    "properties": {
                        "kind": {"enum": ["add", "split", "combine", "delete"]},
                        "source_theme_ids": {"type": "array", "items": _NONEMPTY},
                        "result_theme_ids": {"type": "array", "items": _NONEMPTY},
                        "rationale": {"type": "string"},
                    },
                },
            },
            "themes": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["id", "name", "description"],
                    "properties": {
                        "id": _NONEMPTY,
                        "name": _NONEMPTY,
                        "description": _NONEMPTY,
                        "supporting_code_ids": {"type": "array", "items": _NONEMPTY},
                    },
                },
            },
        },
    },
    "geval_score": {
        "type": "object",
        "required": ["score"],
        "properties": {
            "score": {"type": "integer", "minimum": 1, "maximum": 5},
        },
    },
}


class StructuredOutputError(ValueError):
    """Model text failed to parse or validate; message is quoted back on repair."""


_FENCE = re.compile(r"^```(?:json)?\s*\n(.*)\n```\s*$", re.DOTALL)


def extract_json_text(text: str) -> str:
    stripped = text.strip()
    m = _FENCE.match(stripped)
    if m:
        return m.group(1)
    # fall back to the outermost braces, tolerating prose around the object
    start, end = stripped.find("{"), stripped.rfind("}")
    if start != -1 and end > start:
        return stripped[start:end + 1]
    return stripped


def parse_and_validate(text: str, schema_id: str) -> dict:
    schema = SCHEMAS[schema_id]
    try:
        value = json.loads(extract_json_text(text))
    except json.JSONDecodeError as e:
        raise StructuredOutputError(f"invalid JSON: {e}") from e
    try:
        jsonschema.validate(value, schema)
    except jsonschema.ValidationError as e:
        raise StructuredOutputError(f"schema violation: {e.message}") from e
    return value


def format_instruction(schema_id: str) -> str:
    """Output-format block appended to every structured prompt."""
    return (
        f'Respond with only a JSON object conforming to the registered '
        f'schema "{schema_id}". Do not include any prose outside the JSON.'
    )
