"""Validation and deterministic execution of waveform graphs."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

from ..metrics import LinkReport
from .blocks import REGISTRY, Block, DataSink, RunContext
from .grammar import WaveformGraph, find_cycle

log = logging.getLogger(__name__)

QUEUE_CAPACITY = 64


class PipelineValidationError(ValueError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


class PipelineRuntimeError(RuntimeError):
    def __init__(self, module: str, tick, cause: Exception):
        where = "flush" if tick is None else f"tick {tick}"
        super().__init__(f"module {module!r} failed at {where}: {cause}")
        self.module = module
        self.tick = tick
        self.cause = cause


@dataclass(frozen=True)
class RunConfig:
    """``overrides`` keys are ``param`` (every module declaring it) or ``module.param``.

    ``snr_db`` when set applies to every ``channel_awgn`` module and wins over
    both the file and the overrides.
    """

    seed: int = 0
    n_subframes: int = 10
    snr_db: float | None = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_subframes < 1:
            raise ValueError("n_subframes must be >= 1")


def resolve_params(graph: WaveformGraph, config: RunConfig | None, registry=REGISTRY):
    """Merged parameter maps per module plus diagnostics for unknown override targets."""
    config = config or RunConfig()
    names = set(graph.names)
    diags = []
    for key in config.overrides:
        mod, dot, param = key.rpartition(".")
        if dot and mod not in names:
            diags.append(f"override {key!r} names unknown module {mod!r}")
        elif not dot and not any(param in registry[m.type_id].params
                                 for m in graph.modules if m.type_id in registry):
            diags.append(f"override {key!r} matches no module parameter")
    resolved = {}
    for m in graph.modules:
        cls = registry.get(m.type_id)
        params = dict(m.params)
        if cls is not None:
            for key, value in config.overrides.items():
                if "." not in key and key in cls.params:
                    params[key] = value
            for key, value in config.overrides.items():
                mod, dot, param = key.rpartition(".")
                if dot and mod == m.name:
                    params[param] = value
            if m.type_id == "channel_awgn" and config.snr_db is not None:
                params["snr_db"] = config.snr_db
        resolved[m.name] = params
    return resolved, diags


def validate(graph: WaveformGraph, registry=REGISTRY, config: RunConfig | None = None) -> list[str]:
    """Diagnostics that would prevent ``run``; an empty list means runnable."""
    resolved, diags = resolve_params(graph, config, registry)
    types = {}
    for m in graph.modules:
        cls = registry.get(m.type_id)
        if cls is None:
            diags.append(f"{m.name}: unknown module type {m.type_id!r}")
            continue
        types[m.name] = cls
        params = resolved[m.name]
        for key, value in params.items():
            spec = cls.params.get(key)
            if spec is None:
                diags.append(f"{m.name}: unknown parameter {key!r} for {m.type_id}")
            elif (msg := spec.problem(value)) is not None:
                diags.append(f"{m.name}.{key}: {msg}")
        for key, spec in cls.params.items():
            if spec.required and key not in params:
                diags.append(f"{m.name}: missing required parameter {key!r}")

    producers: dict[tuple[str, str], list[str]] = {}
    for c in graph.connections:
        if c.src not in graph.names or c.dst not in graph.names:
            diags.append(f"line {c.line}: connection {c} references an undeclared module")
            continue
        if c.src in types and c.src_port not in types[c.src].outputs:
            diags.append(f"line {c.line}: {c.src} ({graph.module(c.src).type_id}) has no output port {c.src_port!r}")
        if c.dst in types and c.dst_port not in types[c.dst].inputs:
            diags.append(f"line {c.line}: {c.dst} ({graph.module(c.dst).type_id}) has no input port {c.dst_port!r}")
        producers.setdefault((c.dst, c.dst_port), []).append(f"{c.src}.{c.src_port}")
    for (dst, port), srcs in sorted(producers.items()):
        if len(srcs) > 1:
            diags.append(f"input {dst}.{port} has {len(srcs)} producers: {', '.join(srcs)}")
    for name, cls in types.items():
        for port in cls.inputs:
            if (name, port) not in producers:
                diags.append(f"input {name}.{port} is not connected")

    cycle = find_cycle(graph.names, [(c.src, c.dst) for c in graph.connections
                                     if c.src in graph.names and c.dst in graph.names])
    if cycle:
        diags.append("cycle detected: " + " -> ".join(cycle))
    return diags


def topological_order(graph: WaveformGraph) -> list[str]:
    """Kahn's algorithm, ties broken by declaration order."""
    indeg = {n: 0 for n in graph.names}
    succ = {n: [] for n in graph.names}
    for c in graph.connections:
        succ[c.src].append(c.dst)
        indeg[c.dst] += 1
    ready = [n for n in graph.names if indeg[n] == 0]
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    if len(order) != len(graph.names):
        raise PipelineValidationError(["cycle detected"])
    return order


def _check_order(graph: WaveformGraph, order: list[str]) -> None:
    pos = {n: i for i, n in enumerate(order)}
    if sorted(order) != sorted(graph.names):
        raise ValueError("schedule must list every module exactly once")
    for c in graph.connections:
        if pos[c.src] > pos[c.dst]:
            raise ValueError(f"schedule runs {c.dst} before its producer {c.src}")


def build(graph: WaveformGraph, config: RunConfig, registry=REGISTRY,
          ctx: RunContext | None = None) -> dict[str, Block]:
    diags = validate(graph, registry, config)
    if diags:
        raise PipelineValidationError(diags)
    ctx = ctx or RunContext(seed=config.seed)
    resolved, _ = resolve_params(graph, config, registry)
    blocks = {}
    for m in graph.modules:
        cls = registry[m.type_id]
        params = {k: spec.default for k, spec in cls.params.items() if not spec.required}
        params.update({k: cls.params[k].coerce(v) for k, v in resolved[m.name].items()})
        try:
            blocks[m.name] = cls(m.name, params, ctx)
        except Exception as exc:
            raise PipelineRuntimeError(m.name, 0, exc) from exc
    return blocks


def _reported_snr(graph, config, registry):
    if config.snr_db is not None:
        return config.snr_db
    resolved, _ = resolve_params(graph, config, registry)
    snrs = {float(resolved[m.name]["snr_db"]) for m in graph.modules
            if m.type_id == "channel_awgn" and "snr_db" in resolved[m.name]}
    return snrs.pop() if len(snrs) == 1 else None


def run(graph: WaveformGraph, config: RunConfig, registry=REGISTRY,
        order: list[str] | None = None, ctx: RunContext | None = None) -> LinkReport:
    """Execute ``config.n_subframes`` ticks and a final flush.

    Every tick each module (in dependency order) first emits its source
    output, then consumes everything queued on its inputs; packets travel
    over bounded FIFOs. After the last tick modules are flushed in the same
    order so buffered samples drain downstream.
    """
    blocks = build(graph, config, registry, ctx)
    order = topological_order(graph) if order is None else list(order)
    _check_order(graph, order)

    fanout: dict[tuple[str, str], list[tuple[str, str]]] = {}
    for c in graph.connections:
        fanout.setdefault((c.src, c.src_port), []).append((c.dst, c.dst_port))
    queues = {(c.dst, c.dst_port): deque() for c in graph.connections}

    def route(name, outputs, tick):
        for port, pkt in outputs:
            for dest in fanout.get((name, port), ()):
                q = queues[dest]
                if len(q) >= QUEUE_CAPACITY:
                    raise PipelineRuntimeError(name, tick, OverflowError(
                        f"queue into {dest[0]}.{dest[1]} exceeded {QUEUE_CAPACITY} packets"))
                q.append(pkt)

    def step(name, tick, final):
        block = blocks[name]
        try:
            out = [] if final else block.tick(tick)
            for port in sorted(block.inputs):
                q = queues.get((name, port))
                while q:
                    out.extend(block.receive(port, q.popleft()))
            if final:
                out.extend(block.flush())
        except PipelineRuntimeError:
            raise
        except Exception as exc:
            raise PipelineRuntimeError(name, None if final else tick, exc) from exc
        route(name, out, tick)

    for tick in range(config.n_subframes):
        for name in order:
            step(name, tick, final=False)
    for name in order:
        step(name, None, final=True)

    report = LinkReport(snr_db=_reported_snr(graph, config, registry))
    for name in order:
        if isinstance(blocks[name], DataSink):
            report = report.merge(blocks[name].report)
    log.debug("run finished: %s", report)
    return report
