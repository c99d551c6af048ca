"""JSON schemas of every file and ``--json`` output polardet reads or writes."""

_NUMBER4 = {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4}
_COUNTS = {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}}

MANIFEST = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["split", "images", "annotations"],
    "properties": {
        "split": {"type": "string"},
        "images": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "path", "width", "height"],
                "properties": {
                    "id": {"type": "string"},
                    "path": {"type": "string"},
                    "width": {"type": "integer"},
                    "height": {"type": "integer"},
                },
            },
        },
        "annotations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["image_id", "class", "bbox"],
                "properties": {
                    "image_id": {"type": "string"},
                    "class": {"type": "string"},
                    "bbox": _NUMBER4,
                },
            },
        },
    },
}

DETECTION_RECORD = {
    "type": "object",
    "required": ["image_id", "class", "bbox", "score"],
    "properties": {
        "image_id": {"type": "string"},
        "class": {"type": "string"},
        "bbox": _NUMBER4,
        "score": {"type": "number", "minimum": 0, "maximum": 1},
        "id": {"type": ["string", "integer"]},
    },
}

DETECTIONS = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "array",
    "items": DETECTION_RECORD,
}

_AP_RESULT = {
    "type": "object",
    "required": ["class", "ap", "n_gt", "n_det", "n_tp", "flags", "curve"],
    "properties": {
        "class": {"type": "string"},
        "ap": {"type": "number", "minimum": 0, "maximum": 1},
        "n_gt": {"type": "integer", "minimum": 0},
        "n_det": {"type": "integer", "minimum": 0},
        "n_tp": {"type": "integer", "minimum": 0},
        "flags": {"type": "array", "items": {"type": "string"}},
        "curve": {
            "type": "object",
            "required": ["precision", "recall"],
            "properties": {
                "precision": {"type": "array", "items": {"type": "number"}},
                "recall": {"type": "array", "items": {"type": "number"}},
            },
        },
    },
}

REPORT = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["data_format", "iou_threshold", "ap_mode", "classes", "map", "error_rate", "flags"],
    "properties": {
        "data_format": {"type": ["string", "null"]},
        "iou_threshold": {"type": "number"},
        "ap_mode": {"enum": ["allpoint", "11point"]},
        "classes": {"type": "object", "additionalProperties": _AP_RESULT},
        "map": {
            "type": "object",
            "required": ["value", "classes", "counts"],
            "properties": {
                "value": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                "classes": {"type": "array", "items": {"type": "string"}},
                "counts": _COUNTS,
            },
        },
        "error_rate": {
            "type": ["object", "null"],
            "properties": {
                "baseline_format": {"type": ["string", "null"]},
                "per_class": {"type": "object", "additionalProperties": {"type": ["number", "null"]}},
            },
        },
        "flags": {"type": "array", "items": {"type": "string"}},
    },
}

STATS = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["counts", "totals", "insufficient", "min_count"],
    "properties": {
        "counts": {"type": "object", "additionalProperties": _COUNTS},
        "totals": _COUNTS,
        "insufficient": {"type": "array", "items": {"type": "string"}},
        "min_count": {"type": "integer"},
    },
}

VALIDATION = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["valid", "violations"],
    "properties": {
        "valid": {"type": "boolean"},
        "violations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["image_id", "rule", "detail"],
                "properties": {
                    "image_id": {"type": "string"},
                    "rule": {"type": "string"},
                    "detail": {"type": "string"},
                },
            },
        },
    },
}

SUBSAMPLE = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["stride", "n_input", "kept"],
    "properties": {
        "stride": {"type": "integer", "minimum": 1},
        "n_input": {"type": "integer", "minimum": 0},
        "kept": {"type": "array", "items": {"type": "string"}},
    },
}

_FILE_RESULTS = {
    "type": "object",
    "required": ["written", "failures"],
    "properties": {
        "written": {"type": "array", "items": {"type": "string"}},
        "failures": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["input", "error"],
                "properties": {"input": {"type": "string"}, "error": {"type": "string"}},
            },
        },
    },
}

CONVERT = dict(_FILE_RESULTS, **{"$schema": "http://json-schema.org/draft-07/schema#"})
DEMOSAIC = CONVERT
SYNTH = CONVERT

SIDECAR = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["combo", "channels", "width", "height", "bit_depth", "normalization", "flags"],
    "properties": {
        "combo": {"enum": ["intensity", "stokes", "physics"]},
        "channels": {"type": "array", "items": {"type": "string"}, "minItems": 3, "maxItems": 3},
        "width": {"type": "integer"},
        "height": {"type": "integer"},
        "bit_depth": {"type": "integer"},
        "normalization": {
            "type": "object",
            "required": ["mode", "specs"],
            "properties": {
                "mode": {"enum": ["fixed", "per-image"]},
                "specs": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["channel", "lo", "hi"],
                        "properties": {
                            "channel": {"type": "string"},
                            "lo": {"type": "number"},
                            "hi": {"type": "number"},
                        },
                    },
                },
            },
        },
        "flags": _COUNTS,
        "source": {"type": "string"},
    },
}

SCENE = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["width", "height"],
    "properties": {
        "name": {"type": "string"},
        "width": {"type": "integer", "minimum": 1},
        "height": {"type": "integer", "minimum": 1},
        "background": {"$ref": "#/definitions/field"},
        "regions": {
            "type": "array",
            "items": {
                "allOf": [
                    {"$ref": "#/definitions/field"},
                    {
                        "type": "object",
                        "required": ["bbox"],
                        "properties": {
                            "bbox": {"type": "array", "items": {"type": "integer"}, "minItems": 4, "maxItems": 4},
                            "class": {"type": "string"},
                        },
                    },
                ]
            },
        },
        "noise_sigma": {"type": "number", "minimum": 0},
        "seed": {"type": "integer"},
        "bit_depth": {"type": "integer", "minimum": 1, "maximum": 16},
    },
    "definitions": {
        "field": {
            "type": "object",
            "required": ["s0"],
            "properties": {
                "s0": {"type": "number", "minimum": 0},
                "dop": {"type": "number", "minimum": 0, "maximum": 1},
                "aop": {"type": "number", "minimum": -1.5707963267948966, "maximum": 1.5707963267948966},
            },
        }
    },
}
