"""Errors raised by the sounding modules and their CLI exit codes."""

import numpy as np

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class SoundingError(Exception):
    """Base class for every error the sounding chain raises on purpose."""

    exit_code = EXIT_DATA


class DomainError(SoundingError, ValueError):
    """A parameter lies outside the domain of an operation."""


class SchemaError(SoundingError, ValueError):
    """A scene, config or scenario document does not match the vuca-1 schema."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class DataFormatError(SoundingError):
    """A file is unreadable or inconsistent with the configuration it is used with."""


class NumericError(SoundingError, ArithmeticError):
    """A numerical procedure cannot produce a meaningful result."""

    exit_code = EXIT_NUMERIC


# Library failures reported like a NumericError.
NUMERIC_FAILURES = (FloatingPointError, ZeroDivisionError, np.linalg.LinAlgError)
