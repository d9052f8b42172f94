"""Command line entry points.

Subcommands: gen (synthetic network), layout (3D positions), subset
(seeded fraction of a network), bench (interaction benchmark suite),
serve (WebSocket session service), report (re-render a benchmark CSV).

Seeds resolve in order: --seed flag, NETSCAPE_SEED environment variable,
built-in default.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

from netscape import bench as bench_mod
from netscape import graph, layout

INTERACTIONS = (
    ("Translation", bench_mod.translation_script),
    ("Scaling", bench_mod.scaling_script),
    ("Select", bench_mod.selection_script),
)
SCALES = (("full", Fraction(1)), ("2/3rd", Fraction(2, 3)), ("1/3rd", Fraction(1, 3)))


def resolve_seed(flag_value: int | None) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get("NETSCAPE_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"NETSCAPE_SEED must be an integer, got {env!r}")
    return graph.DEFAULT_SEED


def parse_fraction(text: str) -> float:
    """Accept '1/3', '0.25', '1' and friends."""
    try:
        value = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid fraction: {text!r}")
    return value


def _read_network(nodes_path: str, edges_path: str) -> graph.Network:
    return graph.parse_network(
        Path(nodes_path).read_text(), Path(edges_path).read_text()
    )


def _write_network(net: graph.Network, out_dir: str) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    nodes_path = out / "nodes.csv"
    edges_path = out / "edges.csv"
    nodes_path.write_text(graph.write_nodes_csv(net))
    edges_path.write_text(graph.write_edges_csv(net))
    return nodes_path, edges_path


def cmd_gen(args) -> int:
    seed = resolve_seed(args.seed)
    net = graph.generate_synthetic(args.nodes, args.edges, args.modules, seed)
    nodes_path, edges_path = _write_network(net, args.out)
    print(f"wrote {nodes_path} ({net.node_count} nodes) and {edges_path} ({net.edge_count} edges)")
    return 0


def cmd_layout(args) -> int:
    seed = resolve_seed(args.seed)
    net = _read_network(args.nodes, args.edges)
    params = layout.LayoutParams(side=args.side, iterations=args.iters)
    positions = layout.run(net, params, seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(layout.write_layout_csv(net, positions))
    print(f"wrote {out} ({net.node_count} positions, {args.iters} iterations)")
    return 0


def cmd_subset(args) -> int:
    seed = resolve_seed(args.seed)
    net = _read_network(args.nodes, args.edges)
    sub = graph.subset(net, args.fraction, seed)
    nodes_path, edges_path = _write_network(sub, args.out)
    print(f"wrote {nodes_path} ({sub.node_count} nodes) and {edges_path} ({sub.edge_count} edges)")
    return 0


def cmd_bench(args) -> int:
    seed = resolve_seed(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = bench_mod.BenchConfig(
        warmup_frames=args.warmup,
        measured_frames=args.measured,
        edge_mode=args.mode,
        amortized_budget=args.budget,
    )

    full = graph.generate_synthetic(args.nodes, args.edges, args.modules, seed)
    networks = {}
    for scale_name, fraction in SCALES:
        sub = graph.subset(full, float(fraction), seed)
        params = layout.LayoutParams(iterations=args.layout_iters)
        positions = layout.run(sub, params, seed)
        networks[scale_name] = (sub, positions)
        print(f"prepared {scale_name}: {sub.node_count} nodes, {sub.edge_count} edges",
              file=sys.stderr)

    length = config.warmup_frames + config.measured_frames
    reports = []
    for interaction, make_script in INTERACTIONS:
        for scale_name, _ in SCALES:
            sub, positions = networks[scale_name]
            label = f"{interaction} {scale_name}"
            if interaction == "Select":
                script = make_script(sub, length, seed)
            else:
                script = make_script(length, seed)
            samples = bench_mod.run_benchmark(sub, script, config, positions=positions, seed=seed)
            report = bench_mod.summarize(
                samples, config, label,
                nodes=sub.node_count, edges=sub.edge_count, seed=seed,
            )
            reports.append(report)
            (out / bench_mod.report_filename(label)).write_text(
                bench_mod.report_to_json(report)
            )
            print(f"measured {label}: avg {report.avg_all_ms:.2f} ms", file=sys.stderr)

    (out / "bench.csv").write_text(bench_mod.reports_to_csv(reports))

    sub, positions = networks["full"]
    sweep = bench_mod.degree_sweep(sub, config, seed, positions=positions,
                                   count=args.sweep_picks)
    (out / "degree_cost.csv").write_text(bench_mod.degree_samples_to_csv(sweep))

    print(bench_mod.render_report_table(reports))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from netscape.service import create_app

    app = create_app(args.data_root, args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_report(args) -> int:
    reports = bench_mod.reports_from_csv(Path(getattr(args, "in")).read_text())
    print(bench_mod.render_report_table(reports))
    return 0


def _add_seed(parser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: NETSCAPE_SEED or 42)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netscape",
        description="Interactive co-expression network engine: data prep, layout, benchmarks, service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic modular network")
    p.add_argument("--nodes", type=int, default=2693)
    p.add_argument("--edges", type=int, default=89120)
    p.add_argument("--modules", type=int, default=10)
    _add_seed(p)
    p.add_argument("--out", required=True, help="output directory for nodes.csv and edges.csv")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("layout", help="compute 3D positions for a network")
    p.add_argument("--nodes", required=True, help="nodes CSV path")
    p.add_argument("--edges", required=True, help="edges CSV path")
    p.add_argument("--side", type=float, default=100.0, help="bounding cube side length")
    p.add_argument("--iters", type=int, default=500, help="annealing iterations")
    _add_seed(p)
    p.add_argument("--out", required=True, help="output layout CSV path")
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("subset", help="take a seeded node fraction of a network")
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--fraction", type=parse_fraction, required=True,
                   help="node fraction to keep, e.g. 0.5 or 2/3")
    _add_seed(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_subset)

    p = sub.add_parser("bench", help="run the interaction benchmark suite")
    p.add_argument("--mode", choices=(bench_mod.EAGER, bench_mod.AMORTIZED),
                   default=bench_mod.EAGER, help="edge geometry generation mode")
    p.add_argument("--budget", type=int, default=100,
                   help="max new edge segments per frame in amortized mode")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--nodes", type=int, default=2693)
    p.add_argument("--edges", type=int, default=89120)
    p.add_argument("--modules", type=int, default=10)
    _add_seed(p)
    p.add_argument("--layout-iters", type=int, default=60,
                   help="annealing iterations for benchmark layouts")
    p.add_argument("--warmup", type=int, default=500, help="warmup frames per run")
    p.add_argument("--measured", type=int, default=700, help="measured frames per run")
    p.add_argument("--sweep-picks", type=int, default=48,
                   help="nodes sampled for the degree/cost sweep")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the WebSocket session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-root", default=".", help="directory CSV paths resolve against")
    p.add_argument("--static", default=None, help="optional static viewer directory to mount")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="render a benchmark CSV as a table")
    p.add_argument("--in", required=True, help="bench.csv path")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (graph.CsvFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
