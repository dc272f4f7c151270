"""Published reference metrics used to pin down the scoring arithmetic.

Two families of tables from the experiments this toolkit reproduces:

* concept-extraction tables: per-label (P, R, F1) rows for three model
  variants plus a printed MACRO row. These certify that the macro row is the
  unweighted mean over all labels including O.
* symptom-transfer tables: (P, R, F1) per dictionary-mixture fraction and
  test set. Their printed P and R are already rounded to 2 decimals, so the
  F1 consistency check carries a correspondingly looser tolerance.

Values are transcribed verbatim; nothing here is computed.
"""

# label -> {model: (P, R, F1)}; "MACRO" row holds the printed macro values.
CONCEPT_LABELS = ["SYM", "SEVERITY", "BPOC", "INTENSIFIER", "DURATION", "NEGATION", "O"]

CONCEPT_TABLES = {
    "forum-static": {
        "base": {
            "SYM": (0.84, 0.77, 0.80),
            "SEVERITY": (0.67, 0.51, 0.58),
            "BPOC": (0.82, 0.89, 0.85),
            "INTENSIFIER": (0.82, 0.90, 0.86),
            "DURATION": (0.79, 0.79, 0.79),
            "NEGATION": (0.81, 0.88, 0.84),
            "O": (0.96, 0.97, 0.97),
            "MACRO": (0.82, 0.82, 0.81),
        },
        "dict-layer1": {
            "SYM": (0.92, 0.94, 0.93),
            "SEVERITY": (0.74, 0.77, 0.75),
            "BPOC": (0.91, 0.88, 0.89),
            "INTENSIFIER": (0.87, 0.94, 0.91),
            "DURATION": (0.81, 0.91, 0.86),
            "NEGATION": (0.83, 0.83, 0.83),
            "O": (0.98, 0.98, 0.98),
            "MACRO": (0.87, 0.89, 0.88),
        },
        "dict-layer2": {
            "SYM": (0.93, 0.95, 0.94),
            "SEVERITY": (0.75, 0.80, 0.77),
            "BPOC": (0.90, 0.90, 0.90),
            "INTENSIFIER": (0.88, 0.94, 0.91),
            "DURATION": (0.85, 0.89, 0.87),
            "NEGATION": (0.81, 0.87, 0.84),
            "O": (0.99, 0.98, 0.98),
            "MACRO": (0.87, 0.90, 0.89),
        },
    },
    "forum-contextual": {
        "base": {
            "SYM": (0.79, 0.86, 0.82),
            "SEVERITY": (0.70, 0.38, 0.49),
            "BPOC": (0.91, 0.77, 0.83),
            "INTENSIFIER": (0.82, 0.80, 0.81),
            "DURATION": (0.78, 0.82, 0.80),
            "NEGATION": (0.83, 0.90, 0.86),
            "O": (0.96, 0.96, 0.96),
            "MACRO": (0.83, 0.78, 0.80),
        },
        "dict-layer1": {
            "SYM": (0.92, 0.92, 0.92),
            "SEVERITY": (0.75, 0.66, 0.69),
            "BPOC": (0.87, 0.92, 0.89),
            "INTENSIFIER": (0.84, 0.95, 0.89),
            "DURATION": (0.83, 0.87, 0.84),
            "NEGATION": (0.84, 0.89, 0.86),
            "O": (0.98, 0.97, 0.98),
            "MACRO": (0.86, 0.88, 0.87),
        },
        "dict-layer2": {
            "SYM": (0.93, 0.97, 0.95),
            "SEVERITY": (0.75, 0.85, 0.80),
            "BPOC": (0.93, 0.90, 0.91),
            "INTENSIFIER": (0.87, 0.94, 0.90),
            "DURATION": (0.84, 0.91, 0.87),
            "NEGATION": (0.83, 0.93, 0.88),
            "O": (0.99, 0.97, 0.98),
            "MACRO": (0.88, 0.92, 0.90),
        },
    },
}

# fraction -> {test set: (P, R, F1)}
FRACTIONS = (0, 20, 40, 60, 80, 100)

TRANSFER_TABLES = {
    "transfer-forumdict-static": {
        0: {"combined": (1.00, 0.83, 0.90), "forum-dict": (1.00, 1.00, 1.00), "twitter-dict": (0.63, 0.72, 0.67)},
        20: {"combined": (1.00, 0.93, 0.96), "forum-dict": (0.94, 1.00, 0.97), "twitter-dict": (0.67, 0.88, 0.76)},
        40: {"combined": (1.00, 0.96, 0.98), "forum-dict": (0.92, 1.00, 0.96), "twitter-dict": (0.68, 0.94, 0.79)},
        60: {"combined": (1.00, 0.98, 0.99), "forum-dict": (0.91, 1.00, 0.95), "twitter-dict": (0.69, 0.96, 0.80)},
        80: {"combined": (1.00, 1.00, 1.00), "forum-dict": (0.89, 1.00, 0.94), "twitter-dict": (0.70, 1.00, 0.82)},
        100: {"combined": (1.00, 1.00, 1.00), "forum-dict": (0.89, 1.00, 0.94), "twitter-dict": (0.70, 1.00, 0.82)},
    },
    "transfer-twitterdict-static": {
        0: {"combined": (1.00, 0.59, 0.74), "forum-dict": (0.81, 0.51, 0.63), "twitter-dict": (1.00, 1.00, 1.00)},
        20: {"combined": (1.00, 0.88, 0.94), "forum-dict": (0.88, 0.86, 0.87), "twitter-dict": (0.77, 1.00, 0.87)},
        40: {"combined": (1.00, 0.92, 0.96), "forum-dict": (0.88, 0.90, 0.89), "twitter-dict": (0.74, 1.00, 0.85)},
        60: {"combined": (1.00, 0.92, 0.96), "forum-dict": (0.88, 0.89, 0.89), "twitter-dict": (0.73, 0.97, 0.84)},
        80: {"combined": (1.00, 0.98, 0.99), "forum-dict": (0.89, 0.98, 0.93), "twitter-dict": (0.71, 1.00, 0.83)},
        100: {"combined": (1.00, 1.00, 1.00), "forum-dict": (0.89, 1.00, 0.94), "twitter-dict": (0.70, 1.00, 0.82)},
    },
    "transfer-forumdict-contextual": {
        0: {"combined": (1.00, 0.82, 0.90), "forum-dict": (1.00, 1.00, 1.00), "twitter-dict": (0.63, 0.72, 0.67)},
        20: {"combined": (1.00, 0.92, 0.96), "forum-dict": (0.94, 1.00, 0.97), "twitter-dict": (0.67, 0.87, 0.76)},
        40: {"combined": (1.00, 0.96, 0.98), "forum-dict": (0.91, 1.00, 0.96), "twitter-dict": (0.69, 0.94, 0.79)},
        60: {"combined": (1.00, 0.98, 0.99), "forum-dict": (0.91, 1.00, 0.95), "twitter-dict": (0.69, 0.96, 0.81)},
        80: {"combined": (1.00, 1.00, 1.00), "forum-dict": (0.89, 1.00, 0.94), "twitter-dict": (0.70, 1.00, 0.82)},
        100: {"combined": (1.00, 1.00, 1.00), "forum-dict": (0.89, 1.00, 0.94), "twitter-dict": (0.70, 1.00, 0.82)},
    },
    "transfer-twitterdict-contextual": {
        0: {"combined": (1.00, 0.60, 0.75), "forum-dict": (0.81, 0.52, 0.63), "twitter-dict": (1.00, 1.00, 1.00)},
        20: {"combined": (1.00, 0.88, 0.94), "forum-dict": (0.87, 0.86, 0.86), "twitter-dict": (0.77, 1.00, 0.87)},
        40: {"combined": (1.00, 0.92, 0.96), "forum-dict": (0.88, 0.90, 0.89), "twitter-dict": (0.75, 1.00, 0.85)},
        60: {"combined": (1.00, 0.93, 0.96), "forum-dict": (0.88, 0.92, 0.90), "twitter-dict": (0.74, 1.00, 0.85)},
        80: {"combined": (1.00, 0.98, 0.99), "forum-dict": (0.89, 0.98, 0.93), "twitter-dict": (0.71, 1.00, 0.83)},
        100: {"combined": (1.00, 1.00, 1.00), "forum-dict": (0.89, 1.00, 0.94), "twitter-dict": (0.70, 1.00, 0.82)},
    },
    "groundtruth-forumdict": {
        0: {"static": (0.80, 0.56, 0.66), "contextual": (0.82, 0.57, 0.68)},
        20: {"static": (0.82, 0.65, 0.72), "contextual": (0.83, 0.65, 0.73)},
        40: {"static": (0.83, 0.72, 0.77), "contextual": (0.84, 0.70, 0.77)},
        60: {"static": (0.82, 0.74, 0.78), "contextual": (0.84, 0.73, 0.78)},
        80: {"static": (0.83, 0.78, 0.80), "contextual": (0.84, 0.76, 0.80)},
        100: {"static": (0.83, 0.78, 0.81), "contextual": (0.84, 0.76, 0.80)},
    },
    "groundtruth-twitterdict": {
        0: {"static": (0.92, 0.60, 0.72), "contextual": (0.92, 0.57, 0.70)},
        20: {"static": (0.87, 0.74, 0.80), "contextual": (0.88, 0.72, 0.79)},
        40: {"static": (0.86, 0.75, 0.80), "contextual": (0.87, 0.73, 0.80)},
        60: {"static": (0.85, 0.75, 0.80), "contextual": (0.87, 0.74, 0.80)},
        80: {"static": (0.84, 0.78, 0.81), "contextual": (0.85, 0.76, 0.80)},
        100: {"static": (0.83, 0.78, 0.81), "contextual": (0.84, 0.76, 0.80)},
    },
}
