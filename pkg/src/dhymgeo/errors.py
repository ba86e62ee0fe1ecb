"""Exception types shared across the package.

PreconditionError marks rejected inputs or configuration (CLI exit 2);
ValidationError marks checks that ran and failed (CLI exit 1).
"""


class DhymgeoError(Exception):
    pass


class PreconditionError(DhymgeoError):
    pass


class ValidationError(DhymgeoError):
    pass
