"""JSON schemas for every machine-readable artifact the CLI writes."""

_CORRELATION = {
    "type": "object",
    "required": ["r", "p_value", "n", "defined"],
    "properties": {
        "r": {"type": ["number", "null"]},
        "p_value": {"type": ["number", "null"]},
        "n": {"type": "integer", "minimum": 0},
        "defined": {"type": "boolean"},
    },
}

TRAIN_LOG_LINE = {
    "type": "object",
    "required": ["epoch", "lr", "train_loss", "val_loss", "val_acc"],
    "properties": {
        "epoch": {"type": "integer", "minimum": 0},
        "lr": {"type": "number", "exclusiveMinimum": 0},
        "train_loss": {"type": "number"},
        "train_acc": {"type": "number", "minimum": 0, "maximum": 1},
        "val_loss": {"type": "number"},
        "val_acc": {"type": "number", "minimum": 0, "maximum": 1},
        "decays": {"type": "integer", "minimum": 0},
    },
}

GAN_LOG_LINE = {
    "type": "object",
    "required": ["iter", "L_D", "L_G", "r1"],
    "properties": {
        "iter": {"type": "integer", "minimum": 0},
        "L_D": {"type": "number"},
        "L_G": {"type": "number"},
        "r1": {"type": "number"},
        "grad_norm_d": {"type": "number", "minimum": 0},
        "grad_norm_g": {"type": "number", "minimum": 0},
    },
}

MATCHING_EVAL = {
    "type": "object",
    "required": ["mode", "k", "n_repeats", "mean_acc", "std_acc"],
    "properties": {
        "mode": {"enum": ["vf", "fv"]},
        "k": {"type": "integer", "minimum": 1},
        "n_repeats": {"type": "integer", "minimum": 1},
        "n_examples": {"type": "integer", "minimum": 1},
        "mean_acc": {"type": "number", "minimum": 0, "maximum": 1},
        "std_acc": {"type": "number", "minimum": 0},
        "per_repeat": {"type": "array", "items": {"type": "number"}},
    },
}

QTA1 = {
    "type": "object",
    "required": ["experiment", "correlation", "n_pairs"],
    "properties": {
        "experiment": {"const": "qta1"},
        "correlation": _CORRELATION,
        "n_pairs": {"type": "integer", "minimum": 3},
        "truncation": {"type": ["number", "null"]},
        "scatter": {
            "type": "object",
            "required": ["condition_distances", "face_distances"],
            "properties": {
                "condition_distances": {"type": "array", "items": {"type": "number"}},
                "face_distances": {"type": "array", "items": {"type": "number"}},
            },
        },
    },
}

_REGIME = {
    "type": "object",
    "required": ["mean_condition_cd", "mean_face_cd", "n_pairs"],
    "properties": {
        "mean_condition_cd": {"type": "number"},
        "mean_face_cd": {"type": "number"},
        "n_pairs": {"type": "integer", "minimum": 1},
    },
}

QTA1_CONTROL = {
    "type": "object",
    "required": ["experiment", "same_attribute", "different_attribute"],
    "properties": {
        "experiment": {"const": "qta1_control"},
        "same_attribute": _REGIME,
        "different_attribute": _REGIME,
        "truncation": {"type": ["number", "null"]},
        "full_scale_reference": {"type": "object"},
    },
}

QTA2 = {
    "type": "object",
    "required": ["experiment", "fraction", "wins", "ties", "n"],
    "properties": {
        "experiment": {"type": "string"},
        "fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "wins": {"type": "integer", "minimum": 0},
        "ties": {"type": "integer", "minimum": 0},
        "n": {"type": "integer", "minimum": 1},
        "truncation": {"type": ["number", "null"]},
        "full_scale_reference": {"type": "object"},
    },
}

QTA3 = {
    "type": "object",
    "required": ["experiment", "metric", "top_k_acc", "gallery_size", "n_queries"],
    "properties": {
        "experiment": {"const": "qta3"},
        "metric": {"enum": ["l1", "l2", "cd"]},
        "top_k_acc": {
            "type": "object",
            "additionalProperties": {"type": "number", "minimum": 0, "maximum": 100},
        },
        "gallery_size": {"type": "integer", "minimum": 1},
        "n_queries": {"type": "integer", "minimum": 1},
        "truncation": {"type": ["number", "null"]},
        "full_scale_reference": {"type": "object"},
    },
}

GENERATE_META = {
    "type": "object",
    "required": ["n", "files", "truncation"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "files": {"type": "array", "items": {"type": "string"}},
        "truncation": {"type": ["number", "null"]},
        "seed": {"type": "integer"},
    },
}

INTERPOLATE_META = {
    "type": "object",
    "required": ["which", "n_steps", "file"],
    "properties": {
        "which": {"enum": ["condition", "latent"]},
        "n_steps": {"type": "integer", "minimum": 2},
        "file": {"type": "string"},
        "seed": {"type": "integer"},
    },
}

REPORT_SCHEMAS = {
    "train_log_line": TRAIN_LOG_LINE,
    "gan_log_line": GAN_LOG_LINE,
    "matching_eval": MATCHING_EVAL,
    "qta1": QTA1,
    "qta1_control": QTA1_CONTROL,
    "qta2": QTA2,
    "qta3": QTA3,
    "generate_meta": GENERATE_META,
    "interpolate_meta": INTERPOLATE_META,
}
