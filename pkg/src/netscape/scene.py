"""Interaction state machine over one network or a matched pair.

Holds the world transform (grab translation, two-hand scale/rotate, snap
rotation), the selection with its incident-edge geometry, per-module
visibility, and the morph parameter blending two layouts. Every frame,
build_frame re-derives displayed positions from the morph parameter (never
incrementally, so endpoints stay exact) and emits render-ready buffers.

Edge geometry for a selection is generated either eagerly (all segments the
frame the selection changes) or amortized under a per-frame budget, which
spreads the object-creation cost that otherwise stalls high-degree picks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from netscape.graph import Network
from netscape.math3d import (
    IDENTITY_QUAT,
    quat_between,
    quat_from_axis_angle,
    quat_multiply,
    quat_normalize,
    quat_rotate,
    quat_to_matrix,
    ray_box_params,
)

EAGER = "eager"
AMORTIZED = "amortized"

_UP = np.array([0.0, 1.0, 0.0])
_SNAP_ANGLE = math.pi / 4.0


class SceneError(ValueError):
    """Precondition violation; the scene is left untouched."""


@dataclass
class SceneTransform:
    """Uniform similarity transform: world point = rotation * (scale * p) + translation."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())
    scale: float = 1.0

    def apply(self, points: np.ndarray) -> np.ndarray:
        m = quat_to_matrix(self.rotation)
        return (points * self.scale) @ m.T + self.translation


@dataclass(frozen=True)
class EdgeSegment:
    """One rendered edge: world endpoints, color, thickness in (0,1], far-end name."""

    a: tuple[float, float, float]
    b: tuple[float, float, float]
    color: tuple[float, float, float]
    thickness: float
    neighbor: str


@dataclass(frozen=True)
class GeometryFrame:
    """Immutable per-frame render payload.

    ids are display indices of visible nodes; positions/colors/scales align
    with ids. new_segments counts geometry generated this frame (the amortized
    budget bounds it).
    """

    ids: np.ndarray
    positions: np.ndarray
    colors: np.ndarray
    scales: np.ndarray
    segments: tuple[EdgeSegment, ...]
    labels: tuple[tuple[str, tuple[float, float, float]], ...]
    new_segments: int


@dataclass
class _Roster:
    """Display-level view of the network pair, matched by gene name.

    Display ids enumerate network A's nodes first (by A id) and then genes
    only present in B (by B id). Unshared genes keep a fixed position taken
    from the network that has them and fade to zero scale toward the other.
    """

    names: list[str]
    pos_a: np.ndarray
    pos_b: np.ndarray
    col_a: np.ndarray
    col_b: np.ndarray
    scale_a: np.ndarray
    scale_b: np.ndarray
    module_a: np.ndarray  # module id in A, -1 if absent
    module_b: np.ndarray
    a_id: np.ndarray  # node id in A, -1 if absent
    b_id: np.ndarray
    display_of_name: dict[str, int]


def _build_roster(
    net_a: Network, pos_a: np.ndarray, net_b: Network, pos_b: np.ndarray,
    node_size: float,
) -> _Roster:
    b_only = [rec for rec in net_b.nodes if rec.name not in net_a.name_index]
    total = net_a.node_count + len(b_only)

    names = [rec.name for rec in net_a.nodes] + [rec.name for rec in b_only]
    p_a = np.zeros((total, 3))
    p_b = np.zeros((total, 3))
    c_a = np.zeros((total, 3))
    c_b = np.zeros((total, 3))
    s_a = np.zeros(total)
    s_b = np.zeros(total)
    m_a = np.full(total, -1, dtype=np.int64)
    m_b = np.full(total, -1, dtype=np.int64)
    ia = np.full(total, -1, dtype=np.int64)
    ib = np.full(total, -1, dtype=np.int64)

    col_a = net_a.color_array()
    col_b = net_b.color_array()
    for rec in net_a.nodes:
        d = rec.id
        ia[d] = rec.id
        m_a[d] = rec.module_id
        p_a[d] = pos_a[rec.id]
        c_a[d] = col_a[rec.id]
        s_a[d] = node_size
        bid = net_b.name_index.get(rec.name)
        if bid is None:
            # A-only: parked at its A spot, shrinking to nothing toward B.
            p_b[d] = pos_a[rec.id]
            c_b[d] = col_a[rec.id]
        else:
            ib[d] = bid
            m_b[d] = net_b.nodes[bid].module_id
            p_b[d] = pos_b[bid]
            c_b[d] = col_b[bid]
            s_b[d] = node_size
    for offset, rec in enumerate(b_only):
        d = net_a.node_count + offset
        ib[d] = rec.id
        m_b[d] = rec.module_id
        p_a[d] = pos_b[rec.id]
        p_b[d] = pos_b[rec.id]
        c_a[d] = col_b[rec.id]
        c_b[d] = col_b[rec.id]
        s_b[d] = node_size

    return _Roster(
        names, p_a, p_b, c_a, c_b, s_a, s_b, m_a, m_b, ia, ib,
        {name: d for d, name in enumerate(names)},
    )


class SceneState:
    """Single-owner interaction state; operations mutate in place.

    Invariants maintained across every operation: morph_t stays in [0,1]; a
    selection exists only at morph_t 0 or 1 and only while its node is
    visible; the filter mask length always matches the morph-active network's
    module count.
    """

    def __init__(
        self,
        network_a: Network,
        positions_a: np.ndarray,
        network_b: Network | None = None,
        positions_b: np.ndarray | None = None,
        *,
        layout_side: float = 100.0,
        node_size: float | None = None,
    ):
        if network_b is None:
            network_b, positions_b = network_a, positions_a
        if positions_b is None:
            raise SceneError("network B supplied without positions")
        for net, pos, tag in ((network_a, positions_a, "A"), (network_b, positions_b, "B")):
            pos = np.asarray(pos, dtype=np.float64)
            if pos.shape != (net.node_count, 3):
                raise SceneError(
                    f"positions {tag} shape {pos.shape} does not match "
                    f"{net.node_count} nodes"
                )
            if not np.all(np.isfinite(pos)):
                raise SceneError(f"positions {tag} contain non-finite values")
        self.network_a = network_a
        self.network_b = network_b
        self.node_size = float(node_size) if node_size is not None else 0.005 * layout_side
        if not (self.node_size > 0):
            raise SceneError(f"node_size must be positive, got {self.node_size}")
        self._roster = _build_roster(
            network_a, np.asarray(positions_a, dtype=np.float64),
            network_b, np.asarray(positions_b, dtype=np.float64),
            self.node_size,
        )
        self.morph_t = 0.0
        self.transform = SceneTransform()
        self.selection: str | None = None
        self.visible_modules = np.ones(network_a.module_count, dtype=bool)
        self._pending: list[tuple[int, float]] = []  # neighbor display id, weight
        self._generated: list[tuple[int, float, float]] = []  # + thickness
        self._max_weight = 1.0

    # -- morph-dependent views ----------------------------------------------

    @property
    def active_network(self) -> Network:
        """The network whose module structure drives filtering and selection."""
        return self.network_a if self.morph_t <= 0.5 else self.network_b

    def display_positions(self) -> np.ndarray:
        """Pre-transform positions at the current morph parameter.

        Endpoints are copies of the source arrays, not interpolations, so
        t=0 and t=1 reproduce the layouts bit for bit.
        """
        t = self.morph_t
        r = self._roster
        if t == 0.0:
            return r.pos_a.copy()
        if t == 1.0:
            return r.pos_b.copy()
        return (1.0 - t) * r.pos_a + t * r.pos_b

    def display_colors(self) -> np.ndarray:
        t = self.morph_t
        r = self._roster
        if t == 0.0:
            return r.col_a.copy()
        if t == 1.0:
            return r.col_b.copy()
        return (1.0 - t) * r.col_a + t * r.col_b

    def display_scales(self) -> np.ndarray:
        t = self.morph_t
        r = self._roster
        if t == 0.0:
            return r.scale_a.copy()
        if t == 1.0:
            return r.scale_b.copy()
        return (1.0 - t) * r.scale_a + t * r.scale_b

    def _active_modules(self) -> np.ndarray:
        return self._roster.module_a if self.morph_t <= 0.5 else self._roster.module_b

    def visible_mask(self) -> np.ndarray:
        """Per-display-node visibility: module filter AND nonzero scale.

        Nodes absent from the active network (module -1) cannot be addressed
        by the filter and stay visible while their scale is nonzero.
        """
        mods = self._active_modules()
        mask = np.ones(mods.shape[0], dtype=bool)
        addressed = (mods >= 0) & (mods < self.visible_modules.shape[0])
        mask[addressed] = self.visible_modules[mods[addressed]]
        mask &= self.display_scales() > 0.0
        return mask

    def visible_count(self) -> int:
        return int(self.visible_mask().sum())

    def _display_of(self, name: str) -> int | None:
        return self._roster.display_of_name.get(name)

    # -- transform operations -------------------------------------------------

    def translate(self, delta) -> None:
        delta = np.asarray(delta, dtype=np.float64)
        if delta.shape != (3,) or not np.all(np.isfinite(delta)):
            raise SceneError("translation delta must be a finite 3-vector")
        self.transform.translation = self.transform.translation + delta

    def two_hand_transform(self, l0, r0, l1, r1) -> None:
        """Grab with both hands: scale by the separation ratio, rotate by the
        minimal alignment of the hand axis, and carry the grab midpoint."""
        l0, r0, l1, r1 = (np.asarray(v, dtype=np.float64) for v in (l0, r0, l1, r1))
        for v in (l0, r0, l1, r1):
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise SceneError("hand positions must be finite 3-vectors")
        u0 = r0 - l0
        u1 = r1 - l1
        n0 = float(np.linalg.norm(u0))
        n1 = float(np.linalg.norm(u1))
        if n0 == 0.0:
            raise SceneError("initial hand positions coincide")
        if n1 == 0.0:
            raise SceneError("final hand positions coincide")
        factor = n1 / n0
        q = quat_between(u0, u1)
        m0 = (l0 + r0) / 2.0
        m1 = (l1 + r1) / 2.0
        tr = self.transform
        tr.rotation = quat_normalize(quat_multiply(q, tr.rotation))
        tr.scale = factor * tr.scale
        tr.translation = factor * quat_rotate(q, tr.translation - m0) + m1

    def snap_rotate(self, direction: str) -> None:
        """45 degree yaw snap. The viewer turns the camera; the scene composes
        the inverse world rotation so both agree on what is seen."""
        if direction not in ("left", "right"):
            raise SceneError(f"snap direction must be 'left' or 'right', got {direction!r}")
        angle = _SNAP_ANGLE if direction == "right" else -_SNAP_ANGLE
        q = quat_from_axis_angle(_UP, angle)
        tr = self.transform
        tr.rotation = quat_normalize(quat_multiply(q, tr.rotation))
        tr.translation = quat_rotate(q, tr.translation)

    # -- picking and selection --------------------------------------------------

    def pick(self, origin, direction) -> str | None:
        """First visible node whose world-space box the ray enters.

        Boxes are axis-aligned with edge equal to the node's displayed scale;
        they surround the transformed center but do not rotate or scale with
        the scene transform. Ties on entry parameter go to the lower display id.
        """
        origin = np.asarray(origin, dtype=np.float64)
        direction = np.asarray(direction, dtype=np.float64)
        if origin.shape != (3,) or direction.shape != (3,):
            raise SceneError("ray origin and direction must be 3-vectors")
        if not (np.all(np.isfinite(origin)) and np.all(np.isfinite(direction))):
            raise SceneError("ray origin and direction must be finite")
        norm = float(np.linalg.norm(direction))
        if abs(norm - 1.0) > 1e-6:
            raise SceneError(f"ray direction must be unit length, |d| = {norm}")

        mask = self.visible_mask()
        if not mask.any():
            return None
        display_ids = np.nonzero(mask)[0]
        centers = self.transform.apply(self.display_positions()[display_ids])
        half = self.display_scales()[display_ids] / 2.0
        params = ray_box_params(origin, direction, centers, half)
        hit = ~np.isnan(params)
        if not hit.any():
            return None
        best = params[hit].min()
        winner = int(display_ids[hit][params[hit] == best].min())
        return self._roster.names[winner]

    def select(self, name: str | None) -> None:
        """Set or clear the selection; edge geometry regenerates from scratch.

        Only allowed when fully on one network (morph_t 0 or 1) and only for
        nodes passing the filter.
        """
        if name is None:
            self.selection = None
            self._pending = []
            self._generated = []
            return
        if 0.0 < self.morph_t < 1.0:
            raise SceneError(
                f"selection requires morph_t of 0 or 1, currently {self.morph_t}"
            )
        net = self.active_network
        node_id = net.name_index.get(name)
        if node_id is None:
            raise SceneError(f"unknown gene {name!r}")
        display = self._display_of(name)
        if display is None or not self.visible_mask()[display]:
            raise SceneError(f"gene {name!r} is filtered out or absent")
        self.selection = name
        self._load_incident_edges()

    def _load_incident_edges(self) -> None:
        """Queue the selection's incident edges for geometry generation."""
        net = self.active_network
        node_id = net.name_index[self.selection]
        id_map = self._roster.a_id if net is self.network_a else self._roster.b_id
        display_of = np.full(net.node_count, -1, dtype=np.int64)
        present = id_map >= 0
        display_of[id_map[present]] = np.nonzero(present)[0]
        self._pending = [
            (int(display_of[nb]), w) for nb, w in net.adjacency[node_id]
        ]
        self._generated = []
        self._max_weight = max((w for _, w in self._pending), default=1.0)

    def _revalidate_selection(self) -> None:
        if self.selection is None:
            return
        display = self._display_of(self.selection)
        keep = (
            self.morph_t in (0.0, 1.0)
            and display is not None
            and bool(self.visible_mask()[display])
            and self.active_network.name_index.get(self.selection) is not None
        )
        if not keep:
            self.select(None)

    # -- filtering and morphing ---------------------------------------------------

    def set_filter(self, visible) -> None:
        visible = np.asarray(visible, dtype=bool)
        expected = self.active_network.module_count
        if visible.shape != (expected,):
            raise SceneError(
                f"filter mask must have {expected} entries, got {visible.shape}"
            )
        self.visible_modules = visible.copy()
        self._revalidate_selection()

    def set_morph(self, t: float) -> None:
        t = float(t)
        if math.isnan(t) or not (0.0 <= t <= 1.0):
            raise SceneError(f"morph parameter must be in [0, 1], got {t}")
        was_active = self.active_network
        previous_selection = self.selection
        self.morph_t = t
        if 0.0 < t < 1.0:
            self.selection = None
            self._pending = []
            self._generated = []
        now_active = self.active_network
        if now_active is not was_active:
            if now_active.module_count != was_active.module_count:
                # Module ids are not comparable across the pair; start over.
                self.visible_modules = np.ones(now_active.module_count, dtype=bool)
            self._revalidate_selection()
            if self.selection is not None and self.selection == previous_selection:
                # Selection survived an endpoint-to-endpoint jump; its incident
                # edges now come from the other network.
                self._load_incident_edges()
        else:
            self._revalidate_selection()

    # -- geometry ----------------------------------------------------------------

    def build_frame(self, mode: str = EAGER, budget: int = 0) -> GeometryFrame:
        """Produce this frame's render buffers and advance edge generation.

        Eager mode turns the whole pending queue into geometry now; amortized
        mode takes at most `budget` segments from it, so a high-degree
        selection costs a bounded amount per frame instead of one spike.
        """
        if mode not in (EAGER, AMORTIZED):
            raise SceneError(f"unknown mode {mode!r}")
        if mode == AMORTIZED and budget <= 0:
            raise SceneError(f"amortized mode needs a positive budget, got {budget}")

        new_count = 0
        if self.selection is not None and self._pending:
            take = len(self._pending) if mode == EAGER else min(budget, len(self._pending))
            for display, weight in self._pending[:take]:
                self._generated.append(
                    (display, weight, weight / self._max_weight)
                )
            del self._pending[:take]
            new_count = take

        mask = self.visible_mask()
        display_ids = np.nonzero(mask)[0]
        positions = self.display_positions()
        world = self.transform.apply(positions[display_ids])
        colors = self.display_colors()
        scales = self.display_scales()

        segments: list[EdgeSegment] = []
        labels: list[tuple[str, tuple[float, float, float]]] = []
        if self.selection is not None:
            sel_display = self._display_of(self.selection)
            all_world = self.transform.apply(positions)
            sel_world = all_world[sel_display]
            sel_color = colors[sel_display]
            labels.append((self.selection, tuple(float(c) for c in sel_world)))
            for display, _weight, thickness in self._generated:
                if not mask[display]:
                    continue  # hidden neighbors contribute no geometry
                far_world = all_world[display]
                color = (sel_color + colors[display]) / 2.0
                segments.append(
                    EdgeSegment(
                        tuple(float(c) for c in sel_world),
                        tuple(float(c) for c in far_world),
                        tuple(float(c) for c in color),
                        float(thickness),
                        self._roster.names[display],
                    )
                )
                labels.append(
                    (self._roster.names[display], tuple(float(c) for c in far_world))
                )

        return GeometryFrame(
            ids=display_ids.astype(np.int64),
            positions=world,
            colors=colors[display_ids],
            scales=scales[display_ids],
            segments=tuple(segments),
            labels=tuple(labels),
            new_segments=new_count,
        )
