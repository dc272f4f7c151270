"""Offline exporter of frozen-transformer vectors in the CTXE binary format."""

__version__ = "0.1.0"
