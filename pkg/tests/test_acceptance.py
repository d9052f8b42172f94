"""Acceptance gate: one test per release criterion, each printing a PASS/FAIL
line. Oracles here are written from scratch (full sorts, per-axis slab
clipping, pairwise distance means) rather than reusing library internals."""

import contextlib
import math
import sys
import time

import numpy as np
import pytest
from scipy import stats

from netscape.bench import (
    BenchConfig,
    degree_sweep,
    report_to_json,
    reports_to_csv,
    run_benchmark,
    selection_script,
    summarize,
)
from netscape.cli import main
from netscape.graph import generate_synthetic, parse_network, subset
from netscape.layout import LayoutParams, LayoutState, init_positions, run, step
from netscape.scene import SceneError, SceneState


_capman = None


@pytest.fixture(autouse=True)
def _track_capture(request):
    global _capman
    _capman = request.config.pluginmanager.getplugin("capturemanager")
    yield
    _capman = None


def _announce(name: str, ok: bool) -> None:
    line = f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}"
    if _capman is not None:
        # bypass capture so the verdict lands on the real stdout even without -s
        with _capman.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)


@contextlib.contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        _announce(name, False)
        raise
    _announce(name, True)


# -- 1: tail statistics ----------------------------------------------------------


def test_tail_statistics_match_full_sort_oracle_exactly():
    with criterion("tail statistics exactness over 10,000 random series"):
        config = BenchConfig()
        rng = np.random.default_rng(2026)
        lengths = rng.integers(1, 10001, size=10000)
        started = time.perf_counter()
        for n in lengths:
            n = int(n)
            costs = rng.random(n) * 100.0
            report = summarize(costs, config, "series")
            assert report.avg_all_ms == float(np.sum(costs) / n)
            ascending = np.sort(costs)
            for fraction, got in report.avg_slowest:
                m = min(math.ceil(fraction * n), n)
                assert got == float(np.sum(ascending[n - m:]) / m)
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"oracle sweep took {elapsed:.1f} s"


# -- 2: benchmark table shape ------------------------------------------------------


def test_benchmark_suite_emits_nine_bounded_rows(tmp_path, capsys):
    with criterion("benchmark table shape on the 2693-node/89120-edge network"):
        out = tmp_path / "bench"
        started = time.perf_counter()
        code = main(["bench", "--nodes", "2693", "--edges", "89120",
                     "--modules", "10", "--seed", "42", "--out", str(out)])
        elapsed = time.perf_counter() - started
        assert code == 0
        assert elapsed < 300.0, f"bench took {elapsed:.0f} s"

        lines = (out / "bench.csv").read_text().strip().splitlines()
        rows = [line.split(",") for line in lines[1:]]
        assert [r[0] for r in rows] == [
            "Translation full", "Translation 2/3rd", "Translation 1/3rd",
            "Scaling full", "Scaling 2/3rd", "Scaling 1/3rd",
            "Select full", "Select 2/3rd", "Select 1/3rd",
        ]
        for r in rows:
            avg_all, avg_1pct, avg_025 = float(r[1]), float(r[2]), float(r[3])
            assert avg_all <= avg_1pct <= avg_025 <= 100.0, r

        table = capsys.readouterr().out
        header = next(line for line in table.splitlines() if "Benchmark" in line)
        assert header.index("0.25%") < header.index("1%") < header.index("all")


# -- 3: degree/cost correlation and amortized budget -------------------------------


def staircase_network(hubs=200, leaves=2000):
    """Nested-neighborhood bipartite graph: hub i reaches the first
    (i+1)*leaves/hubs leaves, so degrees spread smoothly from 1 to 2000."""
    rng = np.random.default_rng(7)
    node_lines = ["name,module"]
    node_lines += [f"hub{i:03d},{i % 8}" for i in range(hubs)]
    node_lines += [f"leaf{i:04d},8" for i in range(leaves)]
    edge_lines = ["source,target,weight"]
    for i in range(hubs):
        reach = (i + 1) * leaves // hubs
        weights = 1.0 - rng.random(reach)
        edge_lines += [
            f"hub{i:03d},leaf{j:04d},{float(w)!r}" for j, w in enumerate(weights)
        ]
    return parse_network("\n".join(node_lines), "\n".join(edge_lines))


def test_selection_cost_tracks_degree_and_budget_bounds_segments():
    with criterion("degree-cost correlation (eager) and budget bound (amortized)"):
        net = staircase_network()
        positions = init_positions(net, LayoutParams(), 42).positions

        eager = BenchConfig()
        sweep = degree_sweep(net, eager, 42, positions=positions, count=200)
        assert len(sweep) == 200
        rho = stats.spearmanr(
            [s.degree for s in sweep], [s.cost_ms for s in sweep]
        ).statistic
        assert rho > 0.5, f"spearman {rho:.3f}"

        budget = 100
        amortized = BenchConfig(edge_mode="amortized", amortized_budget=budget)
        sweep = degree_sweep(net, amortized, 42, positions=positions, count=200)
        assert max(s.new_segments for s in sweep) <= budget
        assert max(s.degree for s in sweep) > budget  # the bound actually bites


# -- 4: layout equilibrium, fixed point, symmetry ----------------------------------


def test_layout_equilibrium_fixed_point_and_reflection_symmetry():
    with criterion("layout equilibrium, fixed point, reflection symmetry"):
        params = LayoutParams()

        # two nodes, one unit-weight edge: rest length is the optimal distance
        pair = parse_network(
            "name,module\nga,0\ngb,1\n", "source,target,weight\nga,gb,1.0\n"
        )
        k = params.optimal_distance(2)
        for seed in range(5):
            positions = run(pair, params, seed)
            separation = float(np.linalg.norm(positions[0] - positions[1]))
            assert abs(separation - k) / k < 0.02, f"seed {seed}: {separation}"

        # a lone node feels no net force and never moves
        solo = parse_network("name,module\nsolo,0\n", "source,target,weight\n")
        state = init_positions(solo, params, 3)
        stepped = step(state, solo, params)
        assert np.array_equal(stepped.positions, state.positions)

        # point reflection through the origin commutes with stepping
        net = generate_synthetic(80, 200, 4, seed=5)
        state = init_positions(net, params, 9)
        mirror = LayoutState(-state.positions, state.temperature, state.iteration)
        for _ in range(5):
            state_next = step(state, net, params)
            mirror_next = step(mirror, net, params)
            gap = float(np.abs(mirror_next.positions + state_next.positions).max())
            assert gap <= 1e-12, f"reflection gap {gap}"
            state, mirror = state_next, mirror_next


# -- 5: module cohesion -------------------------------------------------------------


def test_modules_form_spatial_clusters_on_every_seed():
    with criterion("module cohesion on 1000 nodes / 10 modules, 10 seeds"):
        net = generate_synthetic(1000, 10000, 10, 42)
        modules = net.module_id_array()
        upper = np.triu_indices(net.node_count, k=1)
        same_module = (modules[:, None] == modules[None, :])[upper]
        params = LayoutParams()
        for seed in range(10):
            positions = run(net, params, seed)
            deltas = positions[:, None, :] - positions[None, :, :]
            distances = np.sqrt((deltas * deltas).sum(-1))[upper]
            intra = float(distances[same_module].mean())
            inter = float(distances[~same_module].mean())
            assert intra < inter, f"seed {seed}: intra {intra:.2f} inter {inter:.2f}"


# -- 6: picking ----------------------------------------------------------------------


def oracle_pick(scene, origin, direction):
    """Brute force: clip the ray against every visible node's box using
    sign-dispatched per-axis entry/exit times; nearest entry wins, ties to
    the lowest display id."""
    mask = scene.visible_mask()
    ids = np.nonzero(mask)[0]
    centers = scene.transform.apply(scene.display_positions()[ids])
    half = scene.display_scales()[ids] / 2.0
    lo = centers - half[:, None]
    hi = centers + half[:, None]

    t_in = np.full(len(ids), -np.inf)
    t_out = np.full(len(ids), np.inf)
    for axis in range(3):
        d, o = direction[axis], origin[axis]
        if d > 0:
            near, far = (lo[:, axis] - o) / d, (hi[:, axis] - o) / d
        elif d < 0:
            near, far = (hi[:, axis] - o) / d, (lo[:, axis] - o) / d
        else:
            inside = (o >= lo[:, axis]) & (o <= hi[:, axis])
            near = np.where(inside, -np.inf, np.inf)
            far = np.where(inside, np.inf, -np.inf)
        t_in = np.maximum(t_in, near)
        t_out = np.minimum(t_out, far)

    hit = (t_in <= t_out) & (t_out >= 0.0)
    if not hit.any():
        return None
    entry = np.maximum(t_in, 0.0)
    best = entry[hit].min()
    winner = int(ids[hit][entry[hit] == best].min())
    # display ids below the first network's size are its nodes, the rest
    # continue into the second network's unshared tail
    return scene.network_a.nodes[winner].name


def test_pick_agrees_with_brute_force_on_a_transformed_scene():
    with criterion("ray pick vs brute-force oracle, 1000 rays plus ties"):
        net = generate_synthetic(2693, 89120, 10, 42)
        positions = init_positions(net, LayoutParams(), 42).positions
        scene = SceneState(net, positions)
        scene.translate([3.0, 4.0, 5.0])
        scene.snap_rotate("right")
        scene.two_hand_transform(
            (-1.0, 0.0, 0.0), (1.0, 0.0, 0.0), (-1.3, 0.2, 0.0), (1.3, -0.2, 0.0)
        )
        mask = [True] * net.module_count
        mask[3] = False
        scene.set_filter(mask)

        rng = np.random.default_rng(7)
        world = scene.transform.apply(scene.display_positions())
        visible = np.nonzero(scene.visible_mask())[0]
        rays = []
        for _ in range(950):
            origin = rng.uniform(-120.0, 120.0, 3)
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            rays.append((origin, direction))
        for _ in range(50):  # aimed rays guarantee hits
            target = world[visible[rng.integers(len(visible))]]
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            rays.append((target - 80.0 * direction, direction))

        hits = 0
        for origin, direction in rays:
            expected = oracle_pick(scene, origin, direction)
            got = scene.pick(origin, direction)
            assert got == expected, (origin, direction, got, expected)
            hits += got is not None
        assert hits >= 50

        # coincident boxes: equal entry parameters resolve to the lower id
        tie_net = parse_network(
            "name,module\noff,0\nfirst,0\nsecond,0\nfar,0\n",
            "source,target,weight\n",
        )
        tie_pos = np.array([
            [0.0, 30.0, 0.0],
            [10.0, 0.0, 0.0],
            [10.0, 0.0, 0.0],
            [30.0, 0.0, 0.0],
        ])
        tie_scene = SceneState(tie_net, tie_pos)
        origin = np.array([-50.0, 0.0, 0.0])
        direction = np.array([1.0, 0.0, 0.0])
        assert oracle_pick(tie_scene, origin, direction) == "first"
        assert tie_scene.pick(origin, direction) == "first"


# -- 7: morphing ----------------------------------------------------------------------


def test_morph_endpoints_bitwise_midpoint_ulp_and_gating():
    with criterion("morph endpoint exactness, midpoint precision, gating"):
        net_a = generate_synthetic(50, 120, 5, seed=1)
        net_b = generate_synthetic(60, 150, 4, seed=2)  # 50 shared + 10 extra
        pos_a = init_positions(net_a, LayoutParams(), 1).positions
        pos_b = init_positions(net_b, LayoutParams(), 2).positions
        scene = SceneState(net_a, pos_a, net_b, pos_b)

        # display order: first network's nodes by id, then the second's
        # unshared tail by id
        names = [n.name for n in net_a.nodes]
        names += [n.name for n in net_b.nodes if n.name not in net_a.name_index]

        scene.set_morph(0.0)
        shown = scene.display_positions()
        assert np.array_equal(shown[: net_a.node_count], pos_a)
        for d in range(net_a.node_count, len(names)):
            parked = pos_b[net_b.name_index[names[d]]]
            assert np.array_equal(shown[d], parked)

        scene.set_morph(1.0)
        shown = scene.display_positions()
        for d, name in enumerate(names):
            b_id = net_b.name_index.get(name)
            expected = pos_b[b_id] if b_id is not None else pos_a[d]
            assert np.array_equal(shown[d], expected)

        scene.set_morph(0.5)
        shown = scene.display_positions()
        for d, name in enumerate(names):
            a_id = net_a.name_index.get(name)
            b_id = net_b.name_index.get(name)
            if a_id is None or b_id is None:
                continue
            exact = (pos_a[a_id] + pos_b[b_id]) / 2.0
            gap = np.abs(shown[d] - exact)
            assert np.all((gap == 0.0) | (gap <= np.spacing(np.abs(exact))))

        with pytest.raises(SceneError):
            scene.select(net_a.nodes[0].name)
        assert scene.selection is None

        scene.set_morph(0.0)
        scene.select(net_a.nodes[0].name)  # allowed again at an endpoint
        assert scene.selection == net_a.nodes[0].name


# -- 8: subsetting ----------------------------------------------------------------------


def test_subset_counts_nesting_and_identity():
    with criterion("subset arithmetic: 897 of 2693, nesting, identity"):
        net = generate_synthetic(2693, 89120, 10, 42)

        third = subset(net, 1.0 / 3.0, seed=7)
        assert third.node_count == 897

        two_thirds = subset(net, 2.0 / 3.0, seed=7)
        names_third = {n.name for n in third.nodes}
        names_two_thirds = {n.name for n in two_thirds.nodes}
        assert names_third <= names_two_thirds

        whole = subset(net, 1.0, seed=7)
        assert [n.name for n in whole.nodes] == [n.name for n in net.nodes]
        by_name = lambda sub, e: (sub.nodes[e.a].name, sub.nodes[e.b].name, e.weight)
        assert {by_name(whole, e) for e in whole.edges} == {
            by_name(net, e) for e in net.edges
        }


# -- 9: determinism -----------------------------------------------------------------------


class DyadicClock:
    """Tick i spans [i, i + i*2^-20] seconds; the difference is exact in
    binary floating point, so measured costs replay bit for bit."""

    def __init__(self):
        self.calls = 0

    def __call__(self) -> float:
        tick, phase = divmod(self.calls, 2)
        self.calls += 1
        return float(tick) + (tick * 2.0**-20 if phase else 0.0)


def test_generation_layout_subset_and_clocked_bench_are_byte_stable(tmp_path):
    with criterion("byte-stable gen, layout, subset, and clocked bench"):
        outs = []
        for tag in ("one", "two"):
            base = tmp_path / tag
            net_dir = base / "net"
            main(["gen", "--nodes", "120", "--edges", "400", "--modules", "5",
                  "--seed", "9", "--out", str(net_dir)])
            main(["layout", "--nodes", str(net_dir / "nodes.csv"),
                  "--edges", str(net_dir / "edges.csv"),
                  "--iters", "40", "--seed", "9", "--out", str(base / "layout.csv")])
            main(["subset", "--nodes", str(net_dir / "nodes.csv"),
                  "--edges", str(net_dir / "edges.csv"),
                  "--fraction", "2/3", "--seed", "9", "--out", str(base / "sub")])
            outs.append({
                "nodes": (net_dir / "nodes.csv").read_bytes(),
                "edges": (net_dir / "edges.csv").read_bytes(),
                "layout": (base / "layout.csv").read_bytes(),
                "sub_nodes": (base / "sub" / "nodes.csv").read_bytes(),
                "sub_edges": (base / "sub" / "edges.csv").read_bytes(),
            })
        assert outs[0] == outs[1]

        config = BenchConfig(warmup_frames=20, measured_frames=80)
        net = generate_synthetic(120, 400, 5, 9)
        artifacts = []
        for _ in range(2):
            script = selection_script(net, 100, seed=9)
            samples = run_benchmark(net, script, config, seed=9, clock=DyadicClock())
            report = summarize(samples, config, "Select full",
                               nodes=net.node_count, edges=net.edge_count, seed=9)
            artifacts.append((reports_to_csv([report]), report_to_json(report)))
        assert artifacts[0] == artifacts[1]
