"""Conflict detection and surrogate safety metrics for AV/HV interactions
at all-way-stop intersections."""

__version__ = "0.1.0"
