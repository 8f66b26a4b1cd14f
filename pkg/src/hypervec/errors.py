"""Shared exception base so callers (and the CLI) can catch package errors uniformly."""


class HypervecError(Exception):
    """Base class for all errors raised by this package."""
