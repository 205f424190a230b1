"""Robust multi-user precoding for visible-light downlinks with quantized CSI."""

__version__ = "0.1.0"
