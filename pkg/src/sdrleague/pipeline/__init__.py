"""Waveform description files and their deterministic dataflow runtime."""

from importlib import resources

from .blocks import REGISTRY, Block, Packet, RunContext
from .grammar import Connection, ModuleDecl, WaveformGraph, WaveformSyntaxError, parse_waveform
from .runtime import (
    PipelineRuntimeError,
    PipelineValidationError,
    RunConfig,
    run,
    topological_order,
    validate,
)

GOLDEN_WAVEFORMS = ("step0_ideal", "step0_awgn", "full_awgn", "full_wav", "tx_wav", "rx_wav")


def golden_text(name: str) -> str:
    """Text of a bundled waveform file (``name`` without the ``.app`` suffix)."""
    return resources.files(__package__).joinpath("waveforms", f"{name}.app").read_text()


def load_golden(name: str) -> WaveformGraph:
    return parse_waveform(golden_text(name))


__all__ = [
    "Block", "Connection", "GOLDEN_WAVEFORMS", "ModuleDecl", "Packet", "PipelineRuntimeError",
    "PipelineValidationError", "REGISTRY", "RunConfig", "RunContext", "WaveformGraph",
    "WaveformSyntaxError", "golden_text", "load_golden", "parse_waveform", "run",
    "topological_order", "validate",
]
