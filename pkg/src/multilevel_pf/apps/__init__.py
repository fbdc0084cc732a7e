"""Application entry points for multilevel-pf."""
