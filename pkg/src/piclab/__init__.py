"""Positive isotropic curvature lab."""
from . import surgery as _surgery  # noqa: F401  registers the cap-closure profile kind

__version__ = "0.1.0"
