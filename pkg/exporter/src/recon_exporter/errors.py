"""Exporter failure classes, each mapped to a distinct CLI exit code."""


class ExporterError(Exception):
    """Base class; generic contract failures exit with code 1."""

    exit_code = 1


class ModelLoadError(ExporterError):
    exit_code = 3


class InferenceError(ExporterError):
    exit_code = 4


class WriteError(ExporterError):
    exit_code = 5
