"""Session service: scene operations over a WebSocket, one session per connection.

Protocol: the client sends JSON text frames, each carrying a `type` tag and a
client-chosen `seq`. Every request gets exactly one JSON reply (`type:
"reply"`) or error (`type: "error"`) echoing that seq; errors never mutate the
session. After every state-changing request the server pushes a frame-delta on
its own channel: a JSON header tagged with a monotonically increasing
`server_seq`, immediately followed by one binary frame holding the visible
node instances:

    u32 count | u32 * count display ids | f32 * 3n positions
    | f32 * 3n colors | f32 * count scales        (all little-endian)

Edge segments ride in the JSON header. If the current segment set still
contains everything previously sent (same selection, nothing dropped), only
the newly added segments are listed; otherwise `segments_reset` is true and
the full set is resent.

Bursts of morph messages are coalesced: when several sit in the queue at
once, only the last is applied; the absorbed ones are acknowledged with
`coalesced: true` and produce no frame push.
"""

from __future__ import annotations

import asyncio
import json
import struct
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from netscape.graph import CsvFormatError, Network, parse_network
from netscape.layout import parse_layout_csv
from netscape.scene import EAGER, EdgeSegment, GeometryFrame, SceneError, SceneState

KNOWN_TYPES = (
    "load", "snapshot", "pick", "select", "filter", "morph",
    "translate", "twohand", "snap",
)


def encode_geometry(frame: GeometryFrame) -> bytes:
    """Pack the visible node instances into the wire's binary block."""
    count = frame.ids.shape[0]
    return b"".join(
        (
            struct.pack("<I", count),
            frame.ids.astype("<u4").tobytes(),
            frame.positions.astype("<f4").tobytes(),
            frame.colors.astype("<f4").tobytes(),
            frame.scales.astype("<f4").tobytes(),
        )
    )


def decode_geometry(blob: bytes):
    """Inverse of encode_geometry; used by tests and tooling."""
    (count,) = struct.unpack_from("<I", blob, 0)
    offset = 4
    ids = np.frombuffer(blob, dtype="<u4", count=count, offset=offset)
    offset += 4 * count
    pos = np.frombuffer(blob, dtype="<f4", count=3 * count, offset=offset)
    offset += 12 * count
    col = np.frombuffer(blob, dtype="<f4", count=3 * count, offset=offset)
    offset += 12 * count
    scale = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
    if offset + 4 * count != len(blob):
        raise ValueError("geometry block length mismatch")
    return ids, pos.reshape(count, 3), col.reshape(count, 3), scale


def _segment_json(seg: EdgeSegment) -> dict:
    return {
        "a": list(seg.a),
        "b": list(seg.b),
        "color": list(seg.color),
        "thickness": seg.thickness,
        "neighbor": seg.neighbor,
    }


def _network_json(net: Network) -> dict:
    counts = np.bincount(net.module_id_array(), minlength=net.module_count)
    return {
        "nodes": net.node_count,
        "edges": net.edge_count,
        "modules": [
            {
                "id": m.module_id,
                "label": m.label,
                "color": list(m.color),
                "count": int(counts[m.module_id]),
            }
            for m in net.modules
        ],
    }


class SessionError(ValueError):
    pass


class Session:
    """One client's scene plus frame-delta bookkeeping.

    handle() is synchronous and deterministic: (message dict) -> (reply dict,
    list of (push header, binary block)). The websocket loop adds transport
    and morph coalescing on top.
    """

    def __init__(self, data_root: str | Path = "."):
        self.data_root = Path(data_root).resolve()
        self.scene: SceneState | None = None
        self.server_seq = 0
        self._last_segments: tuple[EdgeSegment, ...] = ()
        self._last_selection: str | None = None

    # -- helpers --

    def _read_file(self, value) -> str:
        if not isinstance(value, str) or not value:
            raise SessionError(f"expected a file path string, got {value!r}")
        path = (self.data_root / value).resolve()
        if not path.is_relative_to(self.data_root):
            raise SessionError(f"path {value!r} escapes the data root")
        if not path.is_file():
            raise SessionError(f"no such file: {value}")
        return path.read_text()

    def _summary(self) -> dict:
        scene = self.scene
        return {
            "selection": scene.selection,
            "morph_t": scene.morph_t,
            "filter": [bool(b) for b in scene.visible_modules],
            "module_count": scene.active_network.module_count,
            "visible_count": scene.visible_count(),
        }

    def _push(self, *, force_reset: bool = False):
        frame = self.scene.build_frame(EAGER)
        current = frame.segments
        selection = self.scene.selection
        reset = (
            force_reset
            or selection != self._last_selection
            or not set(self._last_segments).issubset(current)
        )
        if reset:
            to_send = current
        else:
            prev = set(self._last_segments)
            to_send = tuple(s for s in current if s not in prev)
        self._last_segments = current
        self._last_selection = selection
        self.server_seq += 1
        header = {
            "type": "frame-delta",
            "channel": "geometry",
            "server_seq": self.server_seq,
            "segments_reset": reset,
            "segments": [_segment_json(s) for s in to_send],
            "labels": [[text, list(anchor)] for text, anchor in frame.labels],
            "new_segments": frame.new_segments,
            "node_count": int(frame.ids.shape[0]),
        }
        return header, encode_geometry(frame)

    @staticmethod
    def _vector(payload, key) -> list[float]:
        value = payload.get(key)
        if (
            not isinstance(value, (list, tuple))
            or len(value) != 3
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in value)
        ):
            raise SessionError(f"{key} must be a 3-element number list")
        return [float(c) for c in value]

    # -- dispatch --

    def handle(self, msg) -> tuple[dict, list]:
        """Process one message; returns (reply, pushes). Errors leave the
        session exactly as it was."""
        if not isinstance(msg, dict):
            return {"type": "error", "seq": None, "message": "message must be a JSON object"}, []
        seq = msg.get("seq")
        if not isinstance(seq, int) or isinstance(seq, bool):
            return {"type": "error", "seq": None, "message": "missing integer seq"}, []
        mtype = msg.get("type")
        if mtype not in KNOWN_TYPES:
            return {"type": "error", "seq": seq, "message": f"unknown message type {mtype!r}"}, []
        if self.scene is None and mtype != "load":
            return {"type": "error", "seq": seq, "message": "no network loaded"}, []
        try:
            result, pushes = getattr(self, f"_op_{mtype}")(msg)
        except (SessionError, SceneError, CsvFormatError, ValueError) as exc:
            return {"type": "error", "seq": seq, "message": str(exc)}, []
        reply = {"type": "reply", "op": mtype, "seq": seq}
        reply.update(result)
        return reply, pushes

    def _op_load(self, msg):
        nodes_a = self._read_file(msg.get("nodesA"))
        edges_a = self._read_file(msg.get("edgesA"))
        layout_a = self._read_file(msg.get("layoutA"))
        net_a = parse_network(nodes_a, edges_a)
        pos_a = parse_layout_csv(net_a, layout_a)

        b_keys = ("nodesB", "edgesB", "layoutB")
        given = [k for k in b_keys if msg.get(k) is not None]
        if given and len(given) != 3:
            raise SessionError("nodesB, edgesB and layoutB must be supplied together")
        if given:
            net_b = parse_network(self._read_file(msg["nodesB"]), self._read_file(msg["edgesB"]))
            pos_b = parse_layout_csv(net_b, self._read_file(msg["layoutB"]))
        else:
            net_b, pos_b = None, None

        scene = SceneState(net_a, pos_a, net_b, pos_b)
        self.scene = scene
        self._last_segments = ()
        self._last_selection = None
        result = {
            "network_a": _network_json(net_a),
            "network_b": _network_json(net_b) if net_b is not None else None,
            "node_size": scene.node_size,
        }
        result.update(self._summary())
        return result, [self._push(force_reset=True)]

    def _op_snapshot(self, msg):
        return self._summary(), [self._push(force_reset=True)]

    def _op_pick(self, msg):
        origin = self._vector(msg, "origin")
        direction = self._vector(msg, "direction")
        return {"node": self.scene.pick(origin, direction)}, []

    def _op_select(self, msg):
        name = msg.get("name")
        if name is not None and not isinstance(name, str):
            raise SessionError("name must be a string or null")
        self.scene.select(name)
        return self._summary(), [self._push()]

    def _op_filter(self, msg):
        mask = msg.get("mask")
        if not isinstance(mask, list) or not all(isinstance(b, bool) for b in mask):
            raise SessionError("mask must be a list of booleans")
        self.scene.set_filter(mask)
        return self._summary(), [self._push()]

    def _op_morph(self, msg):
        t = msg.get("t")
        if not isinstance(t, (int, float)) or isinstance(t, bool):
            raise SessionError("t must be a number")
        self.scene.set_morph(float(t))
        return self._summary(), [self._push()]

    def _op_translate(self, msg):
        self.scene.translate(self._vector(msg, "delta"))
        return self._summary(), [self._push()]

    def _op_twohand(self, msg):
        hands = [self._vector(msg, k) for k in ("l0", "r0", "l1", "r1")]
        self.scene.two_hand_transform(*hands)
        return self._summary(), [self._push()]

    def _op_snap(self, msg):
        direction = msg.get("direction")
        if direction not in ("left", "right"):
            raise SessionError("direction must be 'left' or 'right'")
        self.scene.snap_rotate(direction)
        return self._summary(), [self._push()]


def mark_coalesced(batch: list) -> list[bool]:
    """For each message in the batch, whether a later consecutive morph
    supersedes it. Only runs of adjacent morphs coalesce; any other message
    breaks the run."""
    applied = [True] * len(batch)
    for i in range(len(batch) - 1):
        cur, nxt = batch[i], batch[i + 1]
        if (
            isinstance(cur, dict) and cur.get("type") == "morph"
            and isinstance(nxt, dict) and nxt.get("type") == "morph"
        ):
            applied[i] = False
    return applied


def create_app(data_root: str | Path = ".", static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="netscape session service")

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket):
        await ws.accept()
        session = Session(data_root)
        queue: asyncio.Queue = asyncio.Queue()

        async def reader():
            try:
                while True:
                    queue.put_nowait(await ws.receive_text())
            except WebSocketDisconnect:
                queue.put_nowait(None)

        reader_task = asyncio.create_task(reader())
        try:
            disconnected = False
            while not disconnected:
                batch = [await queue.get()]
                while True:
                    try:
                        batch.append(queue.get_nowait())
                    except asyncio.QueueEmpty:
                        break
                if batch[-1] is None:
                    disconnected = True
                    batch.pop()

                decoded = []
                for raw in batch:
                    try:
                        decoded.append(json.loads(raw))
                    except json.JSONDecodeError:
                        decoded.append({"malformed": raw})
                applied = mark_coalesced(decoded)

                for msg, apply in zip(decoded, applied):
                    if "malformed" in msg and "type" not in msg:
                        await ws.send_text(json.dumps(
                            {"type": "error", "seq": None, "message": "malformed JSON"}
                        ))
                        continue
                    if not apply:
                        seq = msg.get("seq")
                        await ws.send_text(json.dumps({
                            "type": "reply", "op": "morph",
                            "seq": seq if isinstance(seq, int) else None,
                            "coalesced": True,
                        }))
                        continue
                    reply, pushes = session.handle(msg)
                    await ws.send_text(json.dumps(reply))
                    for header, blob in pushes:
                        await ws.send_text(json.dumps(header))
                        await ws.send_bytes(blob)
        finally:
            reader_task.cancel()

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="viewer")

    return app
