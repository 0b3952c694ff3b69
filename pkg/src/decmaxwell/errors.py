"""Exception hierarchy.

Every error carries a short machine-readable ``code`` used by the CLI error
line ``ERROR,<code>,<message>``.
"""


class DecError(Exception):
    code = "dec_error"


class DimensionTooSmallError(DecError, ValueError):
    code = "dimension_too_small"


class CapExceededError(DecError, ValueError):
    code = "cap_exceeded"


class DegreeError(DecError, ValueError):
    code = "invalid_degree"


class MismatchError(DecError, ValueError):
    code = "mismatch"


class MissingCacheError(DecError, KeyError):
    code = "missing_cache"

    def __str__(self):
        return Exception.__str__(self)


class UnknownFunctionError(DecError, ValueError):
    code = "unknown_function"


class SingularFunctionError(DecError, ArithmeticError):
    code = "singular_on_kernel"


class ConstraintViolationError(DecError, ValueError):
    code = "constraint_violation"


class NonUniformGridError(DecError, ValueError):
    code = "non_uniform_grid"


class TooFewSamplesError(DecError, ValueError):
    code = "too_few_samples"


class ConfigError(DecError, ValueError):
    code = "config"
