"""Mobility offer allocation toolkit."""

from .core import (Demand, Evaluation, Instance, Offer, Solution, TimeInterval, ValidationError,
                   evaluate, read_instance, validate_instance, write_instance)

__version__ = "0.1.0"

__all__ = [
    "Demand", "Evaluation", "Instance", "Offer", "Solution", "TimeInterval", "ValidationError",
    "evaluate", "read_instance", "validate_instance", "write_instance",
]
