"""Co-expression network data model: CSV ingestion, lookup, subsetting, generation.

A network is a set of named gene nodes grouped into modules (clusters) plus
weighted undirected edges. Nodes carry dense integer ids; a name index maps
gene names back to ids, and per-node adjacency lists mirror the edge list.
Networks are immutable after construction and safe to share across readers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_SEED = 42

# Fallback colors (RGB in [0, 1]) cycled by module id when the nodes file has
# no color columns. Later cycles are dimmed so module colors stay distinct.
MODULE_PALETTE: tuple[tuple[float, float, float], ...] = (
    (0.894, 0.102, 0.110),
    (0.216, 0.494, 0.722),
    (0.302, 0.686, 0.290),
    (0.596, 0.306, 0.639),
    (1.000, 0.498, 0.000),
    (0.969, 0.506, 0.749),
    (0.651, 0.337, 0.157),
    (0.400, 0.761, 0.647),
    (0.988, 0.804, 0.898),
    (0.553, 0.627, 0.796),
    (0.906, 0.161, 0.541),
    (0.400, 0.651, 0.118),
    (0.902, 0.671, 0.008),
    (0.651, 0.463, 0.114),
    (0.371, 0.718, 0.847),
    (0.500, 0.500, 0.500),
)


class CsvFormatError(ValueError):
    """Malformed or inconsistent CSV input, reported with a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class NodeRecord:
    """One gene: dense id, unique name, module (cluster) label, display color."""

    id: int
    name: str
    module_id: int
    color: tuple[float, float, float]


@dataclass(frozen=True)
class EdgeRecord:
    """Undirected co-expression edge, stored with a < b and positive weight."""

    a: int
    b: int
    weight: float


@dataclass(frozen=True)
class ModuleInfo:
    module_id: int
    label: str
    color: tuple[float, float, float]


def module_color(module_id: int) -> tuple[float, float, float]:
    """Palette color for a module; cycles past 16 entries with dimming."""
    base = MODULE_PALETTE[module_id % len(MODULE_PALETTE)]
    cycle = module_id // len(MODULE_PALETTE)
    if cycle == 0:
        return base
    f = 0.6 ** cycle
    return (base[0] * f, base[1] * f, base[2] * f)


@dataclass(eq=True)
class Network:
    """Validated network with name index and per-node adjacency.

    Treat as immutable after construction; all mutating operations in this
    module return new networks.
    """

    nodes: list[NodeRecord]
    edges: list[EdgeRecord]
    name_index: dict[str, int]
    adjacency: list[list[tuple[int, float]]]
    modules: list[ModuleInfo]
    _edge_arrays: tuple[np.ndarray, np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )
    _module_ids: np.ndarray | None = field(default=None, repr=False, compare=False)
    _colors: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def module_count(self) -> int:
        return len(self.modules)

    def degree(self, node_id: int) -> int:
        return len(self.adjacency[node_id])

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Edge endpoints and weights as numpy arrays (a_ids, b_ids, weights)."""
        if self._edge_arrays is None:
            m = len(self.edges)
            a = np.fromiter((e.a for e in self.edges), dtype=np.int64, count=m)
            b = np.fromiter((e.b for e in self.edges), dtype=np.int64, count=m)
            w = np.fromiter((e.weight for e in self.edges), dtype=np.float64, count=m)
            self._edge_arrays = (a, b, w)
        return self._edge_arrays

    def module_id_array(self) -> np.ndarray:
        if self._module_ids is None:
            self._module_ids = np.fromiter(
                (n.module_id for n in self.nodes), dtype=np.int64, count=len(self.nodes)
            )
        return self._module_ids

    def color_array(self) -> np.ndarray:
        if self._colors is None:
            self._colors = np.array([n.color for n in self.nodes], dtype=np.float64).reshape(
                len(self.nodes), 3
            )
        return self._colors


def build_network(
    nodes: list[NodeRecord], edges: list[EdgeRecord], *, _validate: bool = True
) -> Network:
    """Assemble a Network from records, validating invariants and building indexes."""
    n = len(nodes)
    name_index: dict[str, int] = {}
    for rec in nodes:
        if _validate and rec.name in name_index:
            raise ValueError(f"duplicate gene name {rec.name!r}")
        name_index[rec.name] = rec.id

    adjacency: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    seen: set[tuple[int, int]] = set()
    for e in edges:
        if _validate:
            if not (0 <= e.a < n and 0 <= e.b < n):
                raise ValueError(f"edge ({e.a},{e.b}) references unknown node")
            if e.a == e.b:
                raise ValueError(f"self-loop on node {e.a}")
            if (e.a, e.b) in seen:
                raise ValueError(f"duplicate edge ({e.a},{e.b})")
            if not (e.weight > 0) or not math.isfinite(e.weight):
                raise ValueError(f"non-positive weight on edge ({e.a},{e.b})")
            seen.add((e.a, e.b))
        adjacency[e.a].append((e.b, e.weight))
        adjacency[e.b].append((e.a, e.weight))
    for lst in adjacency:
        lst.sort()

    module_count = 1 + max((rec.module_id for rec in nodes), default=-1)
    modules = [
        ModuleInfo(k, f"module {k}", module_color(k)) for k in range(module_count)
    ]
    return Network(nodes, edges, name_index, adjacency, modules)


def _split_rows(text: str) -> list[tuple[int, list[str]]]:
    """Split CSV text into (1-based line number, fields), skipping blank lines."""
    rows = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line:
            continue
        rows.append((lineno, line.split(",")))
    return rows


def _is_header(fields: list[str], names: tuple[str, ...]) -> bool:
    if len(fields) < len(names):
        return False
    return all(f.strip().lower() == n for f, n in zip(fields, names))


def _parse_float(value: str, what: str, lineno: int) -> float:
    try:
        x = float(value)
    except ValueError:
        raise CsvFormatError(f"invalid {what} {value!r}", lineno) from None
    if not math.isfinite(x):
        raise CsvFormatError(f"non-finite {what} {value!r}", lineno)
    return x


def parse_network(nodes_text: str, edges_text: str) -> Network:
    """Parse nodes and edges CSV text into a validated Network.

    Formats: nodes ``name,module[,r,g,b]``, edges ``source,target,weight``.
    The header row is optional and recognized by its column names. Any
    malformed or inconsistent row raises :class:`CsvFormatError` carrying the
    offending line number; no partially constructed network escapes.
    """
    node_rows = _split_rows(nodes_text)
    if node_rows and _is_header(node_rows[0][1], ("name", "module")):
        node_rows = node_rows[1:]

    nodes: list[NodeRecord] = []
    name_to_id: dict[str, int] = {}
    for lineno, fields in node_rows:
        if len(fields) not in (2, 5):
            raise CsvFormatError(
                f"expected 2 or 5 fields in node row, got {len(fields)}", lineno
            )
        name = fields[0]
        if not name:
            raise CsvFormatError("empty gene name", lineno)
        if name in name_to_id:
            raise CsvFormatError(f"duplicate gene name {name!r}", lineno)
        try:
            module_id = int(fields[1])
        except ValueError:
            raise CsvFormatError(f"invalid module id {fields[1]!r}", lineno) from None
        if module_id < 0:
            raise CsvFormatError(f"negative module id {module_id}", lineno)
        if len(fields) == 5:
            rgb = tuple(_parse_float(f, "color component", lineno) for f in fields[2:5])
            if any(not (0.0 <= c <= 1.0) for c in rgb):
                raise CsvFormatError("color component outside [0, 1]", lineno)
            color = (rgb[0], rgb[1], rgb[2])
        else:
            color = module_color(module_id)
        node_id = len(nodes)
        name_to_id[name] = node_id
        nodes.append(NodeRecord(node_id, name, module_id, color))

    edge_rows = _split_rows(edges_text)
    if edge_rows and _is_header(edge_rows[0][1], ("source", "target", "weight")):
        edge_rows = edge_rows[1:]

    edges: list[EdgeRecord] = []
    seen: set[tuple[int, int]] = set()
    for lineno, fields in edge_rows:
        if len(fields) != 3:
            raise CsvFormatError(
                f"expected 3 fields in edge row, got {len(fields)}", lineno
            )
        src, dst = fields[0], fields[1]
        if src not in name_to_id:
            raise CsvFormatError(f"edge references unknown gene {src!r}", lineno)
        if dst not in name_to_id:
            raise CsvFormatError(f"edge references unknown gene {dst!r}", lineno)
        a, b = name_to_id[src], name_to_id[dst]
        if a == b:
            raise CsvFormatError(f"self-loop on gene {src!r}", lineno)
        if a > b:
            a, b = b, a
        if (a, b) in seen:
            raise CsvFormatError(f"duplicate edge {src!r},{dst!r}", lineno)
        seen.add((a, b))
        weight = _parse_float(fields[2], "weight", lineno)
        if weight <= 0:
            raise CsvFormatError(f"non-positive weight {fields[2]!r}", lineno)
        edges.append(EdgeRecord(a, b, weight))

    return build_network(nodes, edges, _validate=False)


def write_nodes_csv(network: Network) -> str:
    """Serialize nodes to CSV with explicit colors; round-trips through parse."""
    lines = ["name,module,r,g,b"]
    for rec in network.nodes:
        r, g, b = rec.color
        lines.append(f"{rec.name},{rec.module_id},{r!r},{g!r},{b!r}")
    return "\n".join(lines) + "\n"


def write_edges_csv(network: Network) -> str:
    lines = ["source,target,weight"]
    names = [rec.name for rec in network.nodes]
    for e in network.edges:
        lines.append(f"{names[e.a]},{names[e.b]},{e.weight!r}")
    return "\n".join(lines) + "\n"


def lookup(network: Network, name: str) -> int | None:
    """Node id for a gene name, or None when absent."""
    return network.name_index.get(name)


def neighbors(network: Network, node_id: int) -> list[tuple[int, float]]:
    """Incident (neighbor id, weight) pairs for a node, each edge once."""
    if not (0 <= node_id < network.node_count):
        raise IndexError(f"node id {node_id} out of range")
    return list(network.adjacency[node_id])


def apply_edge_threshold(network: Network, threshold: float) -> Network:
    """Keep only edges with weight strictly above the threshold."""
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    kept = [e for e in network.edges if e.weight > threshold]
    return build_network(list(network.nodes), kept, _validate=False)


def subset(network: Network, fraction: float, seed: int) -> Network:
    """Deterministic node subsample with induced edges.

    Samples floor(fraction * n) nodes as a prefix of one seeded permutation,
    so smaller fractions at the same seed are nested inside larger ones.
    Ids are re-densified in original order; names and modules are preserved.
    """
    if not (0 < fraction <= 1):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    n = network.node_count
    count = math.floor(fraction * n)
    perm = np.random.default_rng(seed).permutation(n)
    keep = sorted(int(i) for i in perm[:count])
    remap = {old: new for new, old in enumerate(keep)}
    nodes = [
        NodeRecord(remap[old], network.nodes[old].name, network.nodes[old].module_id,
                   network.nodes[old].color)
        for old in keep
    ]
    edges = [
        EdgeRecord(remap[e.a], remap[e.b], e.weight)
        for e in network.edges
        if e.a in remap and e.b in remap
    ]
    return build_network(nodes, edges, _validate=False)


def _sample_pairs(
    rng: np.random.Generator,
    count: int,
    all_pairs: list[tuple[int, int]] | None,
    draw: "callable",
    taken: set[tuple[int, int]],
) -> list[tuple[int, int]]:
    """Draw `count` distinct unordered pairs, by rejection or dense enumeration."""
    if count == 0:
        return []
    if all_pairs is not None and count > len(all_pairs) // 2:
        # Dense request: choose directly from the remaining enumerated pairs.
        free = [p for p in all_pairs if p not in taken]
        idx = rng.choice(len(free), size=count, replace=False)
        picked = [free[int(i)] for i in sorted(int(j) for j in idx)]
        taken.update(picked)
        return picked
    picked = []
    while len(picked) < count:
        pair = draw()
        if pair is None or pair in taken:
            continue
        taken.add(pair)
        picked.append(pair)
    return picked


def generate_synthetic(n: int, m: int, k: int, seed: int) -> Network:
    """Deterministic synthetic network: n nodes in k modules, m edges.

    Edges split 80% intra-module / 20% inter-module (exact counts, clamped to
    what each category can hold); weights are uniform in (0, 1].
    """
    if n < 0 or m < 0:
        raise ValueError("n and m must be non-negative")
    if k < 1:
        raise ValueError(f"module count must be >= 1, got {k}")
    cap_total = n * (n - 1) // 2
    if m > cap_total:
        raise ValueError(f"{m} edges infeasible for {n} nodes (max {cap_total})")

    width = len(str(max(n - 1, 0)))
    module_of = [i * k // n for i in range(n)] if n else []
    nodes = [
        NodeRecord(i, f"g{str(i).zfill(width)}", module_of[i], module_color(module_of[i]))
        for i in range(n)
    ]

    members: list[list[int]] = [[] for _ in range(k)]
    for i in range(n):
        members[module_of[i]].append(i)
    cap_intra = sum(len(ms) * (len(ms) - 1) // 2 for ms in members)
    cap_inter = cap_total - cap_intra

    m_intra = min(round(0.8 * m), cap_intra)
    m_inter = min(m - m_intra, cap_inter)
    m_intra = m - m_inter  # spill any inter overflow back into intra

    rng = np.random.default_rng(seed)
    eligible = [i for i in range(n) if len(members[module_of[i]]) >= 2]

    def draw_intra():
        a = eligible[int(rng.integers(len(eligible)))]
        peers = members[module_of[a]]
        b = peers[int(rng.integers(len(peers)))]
        if a == b:
            return None
        return (a, b) if a < b else (b, a)

    def draw_inter():
        a = int(rng.integers(n))
        b = int(rng.integers(n))
        if a == b or module_of[a] == module_of[b]:
            return None
        return (a, b) if a < b else (b, a)

    dense = cap_total <= 200_000
    intra_pairs = inter_pairs = None
    if dense:
        intra_pairs, inter_pairs = [], []
        for a in range(n):
            for b in range(a + 1, n):
                (intra_pairs if module_of[a] == module_of[b] else inter_pairs).append((a, b))

    taken: set[tuple[int, int]] = set()
    pairs = _sample_pairs(rng, m_intra, intra_pairs, draw_intra, taken)
    pairs += _sample_pairs(rng, m_inter, inter_pairs, draw_inter, taken)

    edges = [EdgeRecord(a, b, float(1.0 - rng.random())) for a, b in pairs]
    edges.sort(key=lambda e: (e.a, e.b))
    return build_network(nodes, edges, _validate=False)
