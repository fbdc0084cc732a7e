"""Tests for package version resolution."""

from __future__ import annotations

from multilevel_pf.version import (
    FALLBACK_VERSION,
    PACKAGE_VERSION,
    resolve_version,
)


def test_missing_distribution_uses_fallback_version() -> None:
    """An uninstalled distribution should report the fallback version."""
    assert resolve_version("multilevel-pf-not-installed") == FALLBACK_VERSION


def test_package_version_is_non_empty() -> None:
    """The module-level version should always be a usable string."""
    assert isinstance(PACKAGE_VERSION, str)
    assert PACKAGE_VERSION
