"""
Hyperpulse Framework.

Copyright 2024.
"""


def describe(code):
    """Return an exit status as string, by number or by name."""
    try:
        return f"{int(code)} {CODES[str(int(code))]}"
    except ValueError:
        return f"{MESSAGES[code.upper()]} {CODES[MESSAGES[code.upper()]]}"


CODES = {
    "0": "OK",
    "1": "Error",
    "2": "PMP Verification Failed",
}

MESSAGES = {v.upper().replace(" ", "_"): k for k, v in CODES.items()}

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PMP_FAIL = 2
