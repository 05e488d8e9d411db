"""Converters from Waymo Open Motion and Lyft Level 5 source data to the
avconflict interchange format (scenarios.jsonl + map.json)."""

__version__ = "0.1.0"

from .common import AdapterReport
from .lyft import convert_lyft
from .waymo import convert_waymo

__all__ = ["AdapterReport", "convert_lyft", "convert_waymo"]
