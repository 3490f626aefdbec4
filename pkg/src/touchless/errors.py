class InputError(ValueError):
    """Bad user-supplied input: missing files, malformed records, invalid sizes."""


class InvariantError(RuntimeError):
    """An internal invariant was violated (CLI exit code 2)."""
