"""Deterministic SDN simulator with a configuration-inference attacker and a flow-obfuscation defense."""

__version__ = "0.1.0"
