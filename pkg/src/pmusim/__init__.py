"""Desk-scale simulator of a PMU-like metering platform.

Signal source -> virtual metering IC -> PTP-disciplined MCU clock ->
12-byte binary frames -> two-stage capture server -> parser -> statistics.
"""

__version__ = "0.1.0"
