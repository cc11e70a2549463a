"""Simplified LTE downlink over an audio channel, with competition scoring and grade analytics."""

__version__ = "0.1.0"
