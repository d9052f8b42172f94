"""Frame-budget benchmark harness.

Runs scripted interaction workloads (translation, scaling, selection) against
a scene for a warmup window followed by a measured window, records per-frame
CPU cost of the scene update plus geometry generation, and summarizes the
distribution as the average of all frames and of the slowest tail fractions.
A report passes when the overall average fits the per-frame budget.

The clock is injectable, so the statistics pipeline is testable with
synthetic costs and byte-reproducible when driven by a scripted clock.
"""

from __future__ import annotations

import gc
import json
import math
import platform as _platform
import time
from dataclasses import dataclass

import numpy as np

from netscape.graph import DEFAULT_SEED, Network
from netscape.layout import LayoutParams, init_positions
from netscape.scene import AMORTIZED, EAGER, SceneState

TRANSLATION = "translation"
SCALING = "scaling"
SELECTION = "selection"

BENCH_CSV_HEADER = "label,avg_ms,avg_1pct_ms,avg_025pct_ms,pass,nodes,edges,mode"
DEGREE_CSV_HEADER = "node,degree,cost_ms"


@dataclass(frozen=True)
class BenchConfig:
    """Benchmark window and gating parameters.

    A frame is never booked above frame_cap_ms (a stalled frame counts as the
    cap, not as its true cost). budget_ms is the pass line for the average.
    """

    warmup_frames: int = 500
    measured_frames: int = 700
    frame_cap_ms: float = 100.0
    budget_ms: float = 13.9
    tail_fractions: tuple[float, ...] = (0.01, 0.0025)
    edge_mode: str = EAGER
    amortized_budget: int = 100

    def __post_init__(self):
        if self.warmup_frames < 0:
            raise ValueError(f"warmup_frames must be >= 0, got {self.warmup_frames}")
        if self.measured_frames <= 0:
            raise ValueError(
                f"measured_frames must be positive, got {self.measured_frames}"
            )
        if not (self.frame_cap_ms > self.budget_ms > 0):
            raise ValueError(
                f"need frame_cap_ms > budget_ms > 0, got cap {self.frame_cap_ms} "
                f"and budget {self.budget_ms}"
            )
        if not self.tail_fractions:
            raise ValueError("at least one tail fraction required")
        for f in self.tail_fractions:
            if not (0.0 < f < 1.0):
                raise ValueError(f"tail fraction {f} outside (0, 1)")
        if self.edge_mode not in (EAGER, AMORTIZED):
            raise ValueError(f"unknown edge_mode {self.edge_mode!r}")
        if self.edge_mode == AMORTIZED and self.amortized_budget <= 0:
            raise ValueError(
                f"amortized_budget must be positive, got {self.amortized_budget}"
            )


@dataclass(frozen=True)
class InteractionScript:
    """A named workload: one scene action per tick."""

    kind: str
    frames: tuple

    def __post_init__(self):
        if self.kind not in (TRANSLATION, SCALING, SELECTION):
            raise ValueError(f"unknown script kind {self.kind!r}")


@dataclass(frozen=True)
class FrameSample:
    index: int
    cost_ms: float


@dataclass(frozen=True)
class BenchReport:
    label: str
    avg_all_ms: float
    avg_slowest: tuple[tuple[float, float], ...]  # (fraction, avg ms)
    passed: bool
    nodes: int
    edges: int
    mode: str
    seed: int | None = None
    platform: str = ""

    def tail(self, fraction: float) -> float:
        for f, value in self.avg_slowest:
            if f == fraction:
                return value
        raise KeyError(f"no tail at fraction {fraction}")


def translation_script(length: int, seed: int) -> InteractionScript:
    """Small random grip moves every frame."""
    rng = np.random.default_rng(seed)
    deltas = rng.uniform(-0.5, 0.5, (length, 3))
    return InteractionScript(TRANSLATION, tuple(map(tuple, deltas)))


def scaling_script(length: int, seed: int) -> InteractionScript:
    """Both grips held, separation breathing around its start value.

    Per-frame hand poses derive from a bounded oscillation so the cumulative
    scale never collapses or explodes over long runs.
    """
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    half = 0.5 + 0.2 * np.sin(phase + 0.05 * np.arange(length + 1))
    frames = []
    for i in range(length):
        l0, r0 = (-half[i], 0.0, 0.0), (half[i], 0.0, 0.0)
        l1, r1 = (-half[i + 1], 0.0, 0.0), (half[i + 1], 0.0, 0.0)
        frames.append((l0, r0, l1, r1))
    return InteractionScript(SCALING, tuple(frames))


def selection_script(
    network: Network, length: int, seed: int, cadence: int = 10
) -> InteractionScript:
    """Visit nodes in a seeded shuffle, changing the selection every `cadence`
    frames and holding it in between."""
    if network.node_count == 0:
        raise ValueError("selection script needs a non-empty network")
    rng = np.random.default_rng(seed)
    visit = rng.permutation(network.node_count)
    names = [net_rec.name for net_rec in network.nodes]
    frames: list[str | None] = []
    for i in range(length):
        if i % cadence == 0:
            frames.append(names[int(visit[(i // cadence) % len(visit)])])
        else:
            frames.append(None)
    return InteractionScript(SELECTION, tuple(frames))


def _apply_action(scene: SceneState, kind: str, action) -> None:
    if kind == TRANSLATION:
        scene.translate(action)
    elif kind == SCALING:
        scene.two_hand_transform(*action)
    elif action is not None:  # selection hold frames carry None
        scene.select(action)


def run_benchmark(
    network: Network,
    script: InteractionScript,
    config: BenchConfig,
    *,
    positions: np.ndarray | None = None,
    seed: int = DEFAULT_SEED,
    clock=time.perf_counter,
) -> list[FrameSample]:
    """Tick the scene through warmup plus measured frames; return the measured
    window. The clock is read exactly twice per tick, bracketing the scene
    update and build_frame together."""
    total = config.warmup_frames + config.measured_frames
    if len(script.frames) < total:
        raise ValueError(
            f"script has {len(script.frames)} frames, needs {total}"
        )
    if positions is None:
        positions = init_positions(network, LayoutParams(), seed).positions
    scene = SceneState(network, positions)
    mode = config.edge_mode
    budget = config.amortized_budget

    samples: list[FrameSample] = []
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        for i in range(total):
            action = script.frames[i]
            start = clock()
            _apply_action(scene, script.kind, action)
            scene.build_frame(mode, budget)
            end = clock()
            cost = (end - start) * 1000.0
            if cost < 0.0:
                cost = 0.0
            if cost > config.frame_cap_ms:
                cost = config.frame_cap_ms
            if i >= config.warmup_frames:
                samples.append(FrameSample(i - config.warmup_frames, cost))
    finally:
        if was_enabled:
            gc.enable()
    return samples


def summarize(
    samples: list[FrameSample],
    config: BenchConfig,
    label: str,
    *,
    nodes: int = 0,
    edges: int = 0,
    seed: int | None = None,
    platform_string: str | None = None,
) -> BenchReport:
    """Average of all costs plus averages of the ceil(f*N) largest per tail
    fraction f. Accepts FrameSample lists or a raw cost array."""
    if isinstance(samples, np.ndarray):
        costs = samples.astype(np.float64, copy=False)
    else:
        costs = np.fromiter((s.cost_ms for s in samples), dtype=np.float64,
                            count=len(samples))
    if costs.size == 0:
        raise ValueError("cannot summarize zero samples")
    n = costs.size
    avg_all = float(costs.mean())
    tails = []
    for fraction in config.tail_fractions:
        m = math.ceil(fraction * n)
        m = min(m, n)
        slowest = np.sort(np.partition(costs, n - m)[n - m:])
        tails.append((fraction, float(np.sum(slowest) / m)))
    return BenchReport(
        label=label,
        avg_all_ms=avg_all,
        avg_slowest=tuple(tails),
        passed=bool(avg_all <= config.budget_ms),
        nodes=nodes,
        edges=edges,
        mode=config.edge_mode,
        seed=seed,
        platform=platform_string if platform_string is not None else _platform.platform(),
    )


def _format_ms(value: float) -> str:
    text = f"{value:.2f}".rstrip("0").rstrip(".")
    return text if text else "0"


def render_report_table(reports: list[BenchReport]) -> str:
    """Aligned text table; tail columns slowest-fraction first, average last."""
    fractions = (
        sorted(f for f, _ in reports[0].avg_slowest)
        if reports
        else [0.0025, 0.01]
    )
    header = ["Benchmark"] + [
        f"Avg. of {f * 100:g}% slowest" for f in fractions
    ] + ["Avg. of all"]
    rows = [header]
    for r in reports:
        cells = [r.label]
        for f in fractions:
            cells.append(_format_ms(r.tail(f)))
        cells.append(_format_ms(r.avg_all_ms))
        rows.append(cells)
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def reports_to_csv(reports: list[BenchReport]) -> str:
    lines = [BENCH_CSV_HEADER]
    for r in reports:
        if "," in r.label:
            raise ValueError(f"label {r.label!r} cannot contain commas")
        try:
            tails = (r.tail(0.01), r.tail(0.0025))
        except KeyError:
            raise ValueError(
                "combined CSV carries the standard 1% and 0.25% tails only"
            ) from None
        lines.append(
            f"{r.label},{r.avg_all_ms!r},{tails[0]!r},{tails[1]!r},"
            f"{'true' if r.passed else 'false'},{r.nodes},{r.edges},{r.mode}"
        )
    return "\n".join(lines) + "\n"


def reports_from_csv(text: str) -> list[BenchReport]:
    """Parse the combined CSV back; fields not carried by the CSV (seed,
    platform) come back at their defaults."""
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != BENCH_CSV_HEADER:
        raise ValueError("missing or unexpected bench CSV header")
    reports = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 8:
            raise ValueError(f"expected 8 fields, got {len(parts)}: {ln!r}")
        label, avg, t1, t025, passed, nodes, edges, mode = parts
        reports.append(
            BenchReport(
                label=label,
                avg_all_ms=float(avg),
                avg_slowest=((0.01, float(t1)), (0.0025, float(t025))),
                passed={"true": True, "false": False}[passed],
                nodes=int(nodes),
                edges=int(edges),
                mode=mode,
            )
        )
    return reports


def report_to_json(report: BenchReport) -> str:
    payload = {
        "label": report.label,
        "avg_all_ms": report.avg_all_ms,
        "avg_slowest": [[f, v] for f, v in report.avg_slowest],
        "pass": report.passed,
        "nodes": report.nodes,
        "edges": report.edges,
        "mode": report.mode,
        "seed": report.seed,
        "platform": report.platform,
    }
    return json.dumps(payload, indent=2) + "\n"


def report_from_json(text: str) -> BenchReport:
    payload = json.loads(text)
    return BenchReport(
        label=payload["label"],
        avg_all_ms=payload["avg_all_ms"],
        avg_slowest=tuple((f, v) for f, v in payload["avg_slowest"]),
        passed=payload["pass"],
        nodes=payload["nodes"],
        edges=payload["edges"],
        mode=payload["mode"],
        seed=payload["seed"],
        platform=payload["platform"],
    )


def report_filename(label: str) -> str:
    safe = label.replace(" ", "_").replace("/", "-")
    return f"{safe}.report.json"


@dataclass(frozen=True)
class DegreeSample:
    name: str
    degree: int
    cost_ms: float
    new_segments: int


def degree_sweep(
    network: Network,
    config: BenchConfig,
    seed: int,
    *,
    positions: np.ndarray | None = None,
    count: int = 200,
    repeats: int = 3,
    clock=time.perf_counter,
) -> list[DegreeSample]:
    """Cost of the selection-change frame across the degree range.

    Nodes are ordered by degree (seeded shuffle breaking ties) and sampled
    evenly across that order; each sample is the best of `repeats` timed
    select + build_frame rounds, which suppresses scheduler noise.
    """
    n = network.node_count
    if n == 0:
        raise ValueError("degree sweep needs a non-empty network")
    if positions is None:
        positions = init_positions(network, LayoutParams(), seed).positions
    rng = np.random.default_rng(seed)
    tiebreak = rng.permutation(n)
    by_degree = sorted(range(n), key=lambda i: (network.degree(i), tiebreak[i]))
    picks = np.unique(np.linspace(0, n - 1, min(count, n)).round().astype(int))

    scene = SceneState(network, positions)
    mode = config.edge_mode
    budget = config.amortized_budget
    samples = []
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        for idx in picks:
            node_id = by_degree[int(idx)]
            name = network.nodes[node_id].name
            best = math.inf
            new_segments = 0
            for _ in range(repeats):
                scene.select(None)
                start = clock()
                scene.select(name)
                frame = scene.build_frame(mode, budget)
                end = clock()
                cost = (end - start) * 1000.0
                if cost < best:
                    best = cost
                new_segments = frame.new_segments
            samples.append(
                DegreeSample(name, network.degree(node_id), max(best, 0.0),
                             new_segments)
            )
    finally:
        if was_enabled:
            gc.enable()
    return samples


def degree_samples_to_csv(samples: list[DegreeSample]) -> str:
    lines = [DEGREE_CSV_HEADER]
    for s in samples:
        lines.append(f"{s.name},{s.degree},{s.cost_ms!r}")
    return "\n".join(lines) + "\n"
