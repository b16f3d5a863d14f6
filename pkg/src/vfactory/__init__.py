"""Virtual five-station production line testbed.

A deterministic, tick-based simulation of a complete factory line
(vacuum gripper, high-bay warehouse, furnace, mill, sorting station)
with soft PLCs, Modbus TCP over an emulated network, a SCADA service,
scripted attack injection, and an anomaly-detection suite with labeled
dataset export.
"""

__version__ = "0.1.0"

TICK_MS = 20
