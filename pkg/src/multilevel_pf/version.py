"""Installed version of the package, reported by both CLIs."""

from importlib.metadata import PackageNotFoundError, version

PACKAGE_NAME = "multilevel-pf"
FALLBACK_VERSION = "0.1.0"


def resolve_version(distribution: str = PACKAGE_NAME) -> str:
    """Return the installed version of ``distribution``.

    A source checkout that was never installed has no distribution
    metadata; it reports :data:`FALLBACK_VERSION`, the same fallback the
    build backend uses outside a tagged checkout.
    """
    try:
        return version(distribution)
    except PackageNotFoundError:
        return FALLBACK_VERSION


PACKAGE_VERSION: str = resolve_version()
