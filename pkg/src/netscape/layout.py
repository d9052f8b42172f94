"""Deterministic 3D force-directed layout with module cohesion.

Fruchterman-Reingold style annealing in a bounding cube: pairwise repulsion,
weight-scaled attraction along edges, and a gentle pull toward each node's
module centroid so clusters occupy distinct regions. All arithmetic is
vectorized numpy with fixed accumulation order, so runs are bit-reproducible
for equal (network, params, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from netscape.graph import CsvFormatError, Network

# All-pairs repulsion is exact up to this many nodes; larger networks use a
# uniform spatial grid with a per-cell centroid far field.
EXACT_PAIR_LIMIT = 3000

_BLOCK = 512

# Fixed seed for the coincident-point jitter table. Not configurable: jitter
# must be a pure function of node index so step() stays deterministic.
_JITTER_SEED = 0x6A177E12


@dataclass(frozen=True)
class LayoutParams:
    """Solver tuning knobs.

    `initial_temp` is a fraction of `side`: the first step caps per-node
    movement at initial_temp * side world units, decaying by `cooling` each
    step. `spacing` scales the ideal neighbor distance k = spacing *
    (side^3 / n)^(1/3). `weight_exponent` sharpens (>1) or flattens (<1) how
    strongly heavy edges pull.
    """

    side: float = 100.0
    spacing: float = 1.0
    gravity: float = 0.05
    iterations: int = 500
    initial_temp: float = 0.1
    cooling: float = 0.995
    weight_exponent: float = 1.0

    def __post_init__(self):
        if not (self.side > 0):
            raise ValueError(f"side must be positive, got {self.side}")
        if not (self.spacing > 0):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if self.gravity < 0:
            raise ValueError(f"gravity must be >= 0, got {self.gravity}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if not (self.initial_temp > 0):
            raise ValueError(f"initial_temp must be positive, got {self.initial_temp}")
        if not (0 < self.cooling < 1):
            raise ValueError(f"cooling must be in (0, 1), got {self.cooling}")

    def optimal_distance(self, n: int) -> float:
        """Ideal pair separation k for an n-node layout in this cube."""
        return self.spacing * (self.side**3 / max(n, 1)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class LayoutState:
    """Positions plus annealing bookkeeping. Value type; step() returns a new one."""

    positions: np.ndarray  # (n, 3) float64
    temperature: float
    iteration: int


def init_positions(network: Network, params: LayoutParams, seed: int) -> LayoutState:
    """Seeded uniform start inside the cube, temperature at its ceiling."""
    rng = np.random.default_rng(seed)
    half = params.side / 2.0
    pos = rng.uniform(-half, half, size=(network.node_count, 3))
    return LayoutState(pos, params.initial_temp * params.side, 0)


def _jitter_table(n: int, side: float) -> np.ndarray:
    """Deterministic per-node offset vectors used only for coincident points."""
    rng = np.random.default_rng(_JITTER_SEED)
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (1e-6 * side)


def _repulsion_exact(pos: np.ndarray, k: float, side: float) -> np.ndarray:
    """All-pairs repulsion, row-blocked to bound memory. O(n^2)."""
    n = pos.shape[0]
    disp = np.zeros_like(pos)
    k2 = k * k
    jit = None
    x, y, z = pos[:, 0], pos[:, 1], pos[:, 2]
    for i0 in range(0, n, _BLOCK):
        i1 = min(i0 + _BLOCK, n)
        dx = x[i0:i1, None] - x[None, :]
        dy = y[i0:i1, None] - y[None, :]
        dz = z[i0:i1, None] - z[None, :]
        d2 = dx * dx + dy * dy + dz * dz
        rows = np.arange(i1 - i0)
        d2[rows, i0 + rows] = np.inf  # a node exerts no force on itself
        zero = d2 == 0.0
        if zero.any():
            if jit is None:
                jit = _jitter_table(n, side)
            ii, jj = np.nonzero(zero)
            sub = jit[i0 + ii] - jit[jj]
            dx[ii, jj] = sub[:, 0]
            dy[ii, jj] = sub[:, 1]
            dz[ii, jj] = sub[:, 2]
            d2[ii, jj] = (sub * sub).sum(axis=1)
        inv = k2 / d2
        disp[i0:i1, 0] = (dx * inv).sum(axis=1)
        disp[i0:i1, 1] = (dy * inv).sum(axis=1)
        disp[i0:i1, 2] = (dz * inv).sum(axis=1)
    return disp


def _near_pair_chunks(src_nodes, lens, starts, order, limit=2_000_000):
    """Yield (node index, partner index) arrays for a ragged neighbor gather,
    chunked so pair buffers stay bounded even for degenerate clusterings."""
    cum = np.cumsum(lens)
    lo = 0
    while lo < src_nodes.size:
        base = cum[lo - 1] if lo else 0
        hi = int(np.searchsorted(cum, base + limit, side="left")) + 1
        hi = min(max(hi, lo + 1), src_nodes.size)
        sl = slice(lo, hi)
        lens_c = lens[sl]
        total = int(lens_c.sum())
        firsts = np.cumsum(lens_c) - lens_c
        within = np.arange(total) - np.repeat(firsts, lens_c)
        partners = order[np.repeat(starts[sl], lens_c) + within]
        yield np.repeat(src_nodes[sl], lens_c), partners
        lo = hi


def _repulsion_grid(pos: np.ndarray, k: float, side: float) -> np.ndarray:
    """Grid-binned repulsion: exact within the 27-cell neighborhood, far cells
    approximated by their occupancy-weighted centroid. O(n * occupied cells)."""
    n = pos.shape[0]
    disp = np.zeros_like(pos)
    k2 = k * k
    min_d2 = (1e-6 * side) ** 2

    cells = np.floor(pos / k).astype(np.int64)
    rel = cells - cells.min(axis=0)
    extent = rel.max(axis=0) + 1
    e1, e2 = int(extent[1]), int(extent[2])
    linear = (rel[:, 0] * e1 + rel[:, 1]) * e2 + rel[:, 2]

    occupied, group = np.unique(linear, return_inverse=True)
    ncells = occupied.size
    counts = np.bincount(group, minlength=ncells).astype(np.float64)
    sums = np.zeros((ncells, 3))
    np.add.at(sums, group, pos)
    centroids = sums / counts[:, None]
    occ_coords = np.stack(
        [occupied // (e1 * e2), (occupied // e2) % e1, occupied % e2], axis=1
    )

    order = np.argsort(group, kind="stable")
    starts = np.searchsorted(group[order], np.arange(ncells), side="left")

    jit = None
    # Near part: pairs within one cell of each other, exact. One pass per
    # offset, all nodes vectorized; partner lists gathered from the grouping.
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in (-1, 0, 1):
                tgt = rel + np.array([dx, dy, dz])
                inside = ((tgt >= 0) & (tgt < extent)).all(axis=1)
                tl = (tgt[:, 0] * e1 + tgt[:, 1]) * e2 + tgt[:, 2]
                gi = np.searchsorted(occupied, tl)
                gi = np.minimum(gi, ncells - 1)
                hit = inside & (occupied[gi] == tl)
                src_nodes = np.nonzero(hit)[0]
                if src_nodes.size == 0:
                    continue
                lens = counts[gi[src_nodes]].astype(np.int64)
                gstarts = starts[gi[src_nodes]]
                for ii, jj in _near_pair_chunks(src_nodes, lens, gstarts, order):
                    diff = pos[ii] - pos[jj]
                    d2 = (diff * diff).sum(axis=1)
                    d2[ii == jj] = np.inf
                    zero = d2 == 0.0
                    if zero.any():
                        if jit is None:
                            jit = _jitter_table(n, side)
                        sub = jit[ii[zero]] - jit[jj[zero]]
                        diff[zero] = sub
                        d2[zero] = (sub * sub).sum(axis=1)
                    np.add.at(disp, ii, diff * (k2 / d2)[:, None])

    # Far part: remaining occupied cells act as point masses at their centroids.
    for i0 in range(0, n, _BLOCK):
        i1 = min(i0 + _BLOCK, n)
        diff = pos[i0:i1, None, :] - centroids[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        cheb = np.abs(rel[i0:i1, None, :] - occ_coords[None, :, :]).max(axis=2)
        weight = np.where(
            cheb > 1, counts[None, :] * k2 / np.maximum(d2, min_d2), 0.0
        )
        disp[i0:i1] += (diff * weight[:, :, None]).sum(axis=1)
    return disp


def _attraction(pos: np.ndarray, network: Network, k: float, exponent: float) -> np.ndarray:
    disp = np.zeros_like(pos)
    if network.edge_count == 0:
        return disp
    a, b, w = network.edge_arrays()
    diff = pos[b] - pos[a]
    d = np.sqrt((diff * diff).sum(axis=1))
    strength = w if exponent == 1.0 else w**exponent
    pull = diff * (d * strength / k)[:, None]
    np.add.at(disp, a, pull)
    np.add.at(disp, b, -pull)
    return disp


def _gravity(pos: np.ndarray, network: Network, g: float) -> np.ndarray:
    if g == 0.0 or network.node_count == 0:
        return np.zeros_like(pos)
    mods = network.module_id_array()
    kmods = network.module_count
    sums = np.zeros((kmods, 3))
    np.add.at(sums, mods, pos)
    counts = np.bincount(mods, minlength=kmods).astype(np.float64)
    centroids = sums / np.maximum(counts, 1.0)[:, None]
    return g * (centroids[mods] - pos)


def step(state: LayoutState, network: Network, params: LayoutParams) -> LayoutState:
    """One annealing step; pure, returns the successor state.

    Per-node net displacement is clamped to the current temperature, positions
    to the cube. All force laws are odd under point reflection, so negating
    every position negates the output exactly.
    """
    pos = state.positions
    n = pos.shape[0]
    if n == 0:
        return LayoutState(pos.copy(), state.temperature * params.cooling,
                           state.iteration + 1)

    k = params.optimal_distance(n)
    repulse = _repulsion_exact if n <= EXACT_PAIR_LIMIT else _repulsion_grid
    disp = repulse(pos, k, params.side)
    disp += _attraction(pos, network, k, params.weight_exponent)
    disp += _gravity(pos, network, params.gravity)

    norm = np.sqrt((disp * disp).sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > state.temperature, state.temperature / norm, 1.0)
    half = params.side / 2.0
    new_pos = np.clip(pos + disp * scale[:, None], -half, half)
    return LayoutState(new_pos, state.temperature * params.cooling,
                       state.iteration + 1)


def run(network: Network, params: LayoutParams, seed: int) -> np.ndarray:
    """Init plus `params.iterations` steps; returns final positions."""
    state = init_positions(network, params, seed)
    for _ in range(params.iterations):
        state = step(state, network, params)
    return state.positions


def write_layout_csv(network: Network, positions: np.ndarray) -> str:
    """Positions as `name,x,y,z` rows in node-id order; byte-stable."""
    if positions.shape != (network.node_count, 3):
        raise ValueError(
            f"positions shape {positions.shape} does not match "
            f"{network.node_count} nodes"
        )
    lines = ["name,x,y,z"]
    for rec, row in zip(network.nodes, positions):
        x, y, z = (float(c) for c in row)
        lines.append(f"{rec.name},{x!r},{y!r},{z!r}")
    return "\n".join(lines) + "\n"


def parse_layout_csv(network: Network, text: str) -> np.ndarray:
    """Read a layout CSV back into an (n, 3) array aligned with node ids.

    Every network node must appear exactly once; unknown or repeated names
    raise CsvFormatError with the offending line.
    """
    positions = np.full((network.node_count, 3), np.nan)
    seen: set[int] = set()
    rows = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if line:
            rows.append((lineno, line.split(",")))
    if rows and [f.strip().lower() for f in rows[0][1][:4]] == ["name", "x", "y", "z"]:
        rows = rows[1:]
    for lineno, fields in rows:
        if len(fields) != 4:
            raise CsvFormatError(f"expected 4 fields, got {len(fields)}", lineno)
        name = fields[0]
        node_id = network.name_index.get(name)
        if node_id is None:
            raise CsvFormatError(f"unknown gene {name!r}", lineno)
        if node_id in seen:
            raise CsvFormatError(f"duplicate position for {name!r}", lineno)
        seen.add(node_id)
        try:
            coords = [float(f) for f in fields[1:4]]
        except ValueError:
            raise CsvFormatError("invalid coordinate", lineno) from None
        if not all(math.isfinite(c) for c in coords):
            raise CsvFormatError("non-finite coordinate", lineno)
        positions[node_id] = coords
    if len(seen) != network.node_count:
        missing = next(n.name for n in network.nodes if n.id not in seen)
        raise CsvFormatError(f"no position for gene {missing!r}")
    return positions
