"""Digital twin and teleoperation stack for a 15-DoF pneumatic hand.

Units everywhere: millimeters, degrees, millibars, seconds. Conversions
happen only at wire boundaries (Modbus registers carry integer millibars).
"""

__version__ = "0.1.0"
