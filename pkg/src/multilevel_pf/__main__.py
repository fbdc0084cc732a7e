"""Module entry point for ``python -m multilevel_pf``."""

from .apps.cli import main

if __name__ == "__main__":
    main()
