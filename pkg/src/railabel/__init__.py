"""Labeling service for rail vehicle maintenance events.

Annotators (train drivers, workshop foremen) label sensor-triggered events
through a small HTTP API; the package also carries the harness to run and
score a usability study of that workflow.
"""

__version__ = "0.1.0"
