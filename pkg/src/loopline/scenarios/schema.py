"""JSON schema for scenario documents (draft 2020-12)."""

_NUMBER_OR_PAIR = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}

_NODE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["id", "participants", "gate"],
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "participants": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "gate": {"type": "string"},
        "params": {"type": "object"},
        "position": {"type": "integer"},
        "non_reversed": {"type": "boolean"},
    },
}

_INITIAL = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["preset"],
            "properties": {
                "preset": {"enum": ["product", "singlet", "ghz3", "phi-plus", "phi-minus"]},
                "symbols": {"type": "string"},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["amplitudes"],
            "properties": {"amplitudes": {"type": "array", "items": _NUMBER_OR_PAIR, "minItems": 1}},
        },
    ]
}

_POSTULATE = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["version"],
            "properties": {"version": {"const": "strong"}},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["version", "a_max"],
            "properties": {"version": {"const": "weak"}, "a_max": {"type": "number", "minimum": 0}},
        },
    ]
}

_SITE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "position", "tick", "role"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "position": {"type": "integer"},
        "tick": {"type": "integer"},
        "role": {"enum": ["EMITTER", "ABSORBER"]},
    },
}

_COMMON = {
    "name": {"type": "string", "minLength": 1},
    "description": {"type": "string"},
    "kind": {"enum": ["graph", "transact"]},
    "phi": {"type": "number"},
    "seed": {"type": "integer", "minimum": 0},
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "loopline scenario",
    "type": "object",
    "required": ["name", "kind"],
    "oneOf": [
        {
            "additionalProperties": False,
            "required": ["register", "initial", "schedule", "horizon"],
            "properties": {
                **_COMMON,
                "kind": {"const": "graph"},
                "register": {"type": "array", "items": {"type": "string", "minLength": 1}},
                "initial": _INITIAL,
                "schedule": {
                    "type": "object",
                    "propertyNames": {"pattern": "^(0|[1-9][0-9]*)$"},
                    "additionalProperties": {"type": "array", "items": _NODE},
                },
                "horizon": {"type": "integer", "minimum": 0},
                "postulate": _POSTULATE,
                "tolerances": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"oracle": {"type": "number", "exclusiveMinimum": 0}},
                },
                "probe": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["t_i", "t_f", "ticks"],
                    "properties": {
                        "t_i": {"type": "integer", "minimum": 0},
                        "t_f": {"type": "integer", "minimum": 0},
                        "ticks": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                    },
                },
            },
        },
        {
            "additionalProperties": False,
            "required": ["sites"],
            "properties": {
                **_COMMON,
                "kind": {"const": "transact"},
                "sites": {"type": "array", "items": _SITE, "minItems": 1},
                "light_speed": {"type": "integer", "minimum": 1},
                "order2_fraction": {"type": "number", "minimum": 0, "maximum": 1},
                "amplitudes": {"type": "object", "additionalProperties": _NUMBER_OR_PAIR},
            },
        },
    ],
}
