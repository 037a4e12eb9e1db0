"""Simulation and HVAC scheduling toolkit for PCM-insulated homes with rooftop PV."""

__version__ = "0.4.0"
