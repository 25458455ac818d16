"""Fermionic averaged circuit eigenvalue sampling: learn FLO-twirled gate noise from mirror circuits."""

__version__ = "0.1.0"
