"""Numerical core of yaglom."""

from ._version import __version__, version_info  # noqa: F401
