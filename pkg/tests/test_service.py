"""Session protocol tests: request/reply pairing, error isolation, frame
pushes with binary geometry, morph coalescing, and replay determinism."""

import json

import numpy as np
import pytest
from starlette.testclient import TestClient

from netscape.graph import generate_synthetic, write_edges_csv, write_nodes_csv
from netscape.layout import LayoutParams, run, write_layout_csv
from netscape.service import (
    Session,
    create_app,
    decode_geometry,
    encode_geometry,
    mark_coalesced,
)


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    """Two small related networks with layouts, on disk like a deployment."""
    root = tmp_path_factory.mktemp("data")
    net_a = generate_synthetic(60, 150, 4, seed=7)
    net_b = generate_synthetic(50, 120, 5, seed=8)
    params = LayoutParams(iterations=30)
    pos_a = run(net_a, params, seed=7)
    pos_b = run(net_b, params, seed=8)
    (root / "nodesA.csv").write_text(write_nodes_csv(net_a))
    (root / "edgesA.csv").write_text(write_edges_csv(net_a))
    (root / "layoutA.csv").write_text(write_layout_csv(net_a, pos_a))
    (root / "nodesB.csv").write_text(write_nodes_csv(net_b))
    (root / "edgesB.csv").write_text(write_edges_csv(net_b))
    (root / "layoutB.csv").write_text(write_layout_csv(net_b, pos_b))
    return root


def load_msg(seq=1, with_b=False):
    msg = {
        "type": "load", "seq": seq,
        "nodesA": "nodesA.csv", "edgesA": "edgesA.csv", "layoutA": "layoutA.csv",
    }
    if with_b:
        msg.update(nodesB="nodesB.csv", edgesB="edgesB.csv", layoutB="layoutB.csv")
    return msg


def loaded_session(data_dir, with_b=False):
    session = Session(data_dir)
    reply, pushes = session.handle(load_msg(with_b=with_b))
    assert reply["type"] == "reply"
    return session


# -- binary geometry block ------------------------------------------------------


def test_geometry_block_round_trip(data_dir):
    session = loaded_session(data_dir)
    frame = session.scene.build_frame()
    blob = encode_geometry(frame)
    ids, pos, col, scale = decode_geometry(blob)
    assert len(blob) == 4 + len(ids) * (4 + 12 + 12 + 4)
    np.testing.assert_array_equal(ids, frame.ids.astype(np.uint32))
    np.testing.assert_allclose(pos, frame.positions, rtol=1e-6)
    np.testing.assert_allclose(col, frame.colors, rtol=1e-6)
    np.testing.assert_allclose(scale, frame.scales, rtol=1e-6)


def test_geometry_block_is_little_endian(data_dir):
    session = loaded_session(data_dir)
    frame = session.scene.build_frame()
    blob = encode_geometry(frame)
    count = int.from_bytes(blob[:4], "little")
    assert count == frame.ids.shape[0]


def test_decode_rejects_truncated_block(data_dir):
    session = loaded_session(data_dir)
    blob = encode_geometry(session.scene.build_frame())
    with pytest.raises(ValueError):
        decode_geometry(blob + b"\x00\x00\x00\x00")


# -- request/reply basics -------------------------------------------------------


def test_load_reply_reports_both_networks(data_dir):
    session = Session(data_dir)
    reply, pushes = session.handle(load_msg(seq=9, with_b=True))
    assert reply["seq"] == 9
    assert reply["op"] == "load"
    assert reply["network_a"]["nodes"] == 60
    assert reply["network_b"]["nodes"] == 50
    assert sum(m["count"] for m in reply["network_a"]["modules"]) == 60
    assert reply["morph_t"] == 0.0
    assert reply["selection"] is None
    assert len(pushes) == 1
    header, blob = pushes[0]
    assert header["type"] == "frame-delta"
    assert header["segments_reset"] is True
    assert header["server_seq"] == 1


def test_load_without_b_side_marks_it_null(data_dir):
    session = Session(data_dir)
    reply, _ = session.handle(load_msg())
    assert reply["network_b"] is None


def test_partial_b_side_is_rejected(data_dir):
    session = Session(data_dir)
    msg = load_msg()
    msg["nodesB"] = "nodesB.csv"
    reply, pushes = session.handle(msg)
    assert reply["type"] == "error"
    assert pushes == []
    assert session.scene is None


def test_messages_before_load_error(data_dir):
    session = Session(data_dir)
    reply, _ = session.handle({"type": "snapshot", "seq": 3})
    assert reply == {"type": "error", "seq": 3, "message": "no network loaded"}


def test_unknown_type_and_missing_seq(data_dir):
    session = loaded_session(data_dir)
    reply, _ = session.handle({"type": "warp", "seq": 4})
    assert reply["type"] == "error" and reply["seq"] == 4
    reply, _ = session.handle({"type": "snapshot"})
    assert reply["type"] == "error" and reply["seq"] is None
    reply, _ = session.handle(["not", "a", "dict"])
    assert reply["type"] == "error" and reply["seq"] is None


def test_path_escape_is_rejected(data_dir):
    session = Session(data_dir)
    msg = load_msg()
    msg["nodesA"] = "../../etc/passwd"
    reply, _ = session.handle(msg)
    assert reply["type"] == "error"
    assert "escape" in reply["message"] or "no such file" in reply["message"]


def test_every_request_gets_exactly_one_reply(data_dir):
    session = loaded_session(data_dir)
    msgs = [
        {"type": "snapshot", "seq": 10},
        {"type": "select", "seq": 11, "name": session.scene.network_a.nodes[0].name},
        {"type": "translate", "seq": 12, "delta": [1.0, 0.0, 0.0]},
        {"type": "pick", "seq": 13, "origin": [0, 0, 500], "direction": [0, 0, -1]},
        {"type": "select", "seq": 14, "name": None},
    ]
    for msg in msgs:
        reply, _ = session.handle(msg)
        assert reply["seq"] == msg["seq"]
        assert reply["type"] == "reply"


# -- state-changing operations push frames --------------------------------------


def test_select_reply_and_push_carry_segments(data_dir):
    session = loaded_session(data_dir)
    net = session.scene.network_a
    degrees = [net.degree(i) for i in range(net.node_count)]
    name = net.nodes[int(np.argmax(degrees))].name
    reply, pushes = session.handle({"type": "select", "seq": 2, "name": name})
    assert reply["selection"] == name
    header, blob = pushes[0]
    assert header["segments_reset"] is True
    assert len(header["segments"]) == max(degrees)
    assert header["labels"][0][0] == name
    seg = header["segments"][0]
    assert set(seg) == {"a", "b", "color", "thickness", "neighbor"}
    ids, pos, col, scale = decode_geometry(blob)
    assert len(ids) == reply["visible_count"]


def test_pick_does_not_push(data_dir):
    session = loaded_session(data_dir)
    target = session.scene.network_a.nodes[5].name
    world = session.scene.display_positions()[5]
    origin = world + np.array([0.0, 0.0, 300.0])
    reply, pushes = session.handle(
        {"type": "pick", "seq": 5, "origin": list(origin), "direction": [0.0, 0.0, -1.0]}
    )
    assert reply["node"] == target
    assert pushes == []


def test_filter_push_hides_nodes(data_dir):
    session = loaded_session(data_dir)
    k = session.scene.network_a.module_count
    mask = [True] * k
    mask[0] = False
    reply, pushes = session.handle({"type": "filter", "seq": 6, "mask": mask})
    assert reply["filter"] == mask
    _, blob = pushes[0]
    ids, _, _, _ = decode_geometry(blob)
    hidden = sum(1 for node in session.scene.network_a.nodes if node.module_id == 0)
    assert len(ids) == 60 - hidden


def test_morph_and_snap_and_twohand_round_trip(data_dir):
    session = loaded_session(data_dir, with_b=True)
    reply, pushes = session.handle({"type": "morph", "seq": 7, "t": 1.0})
    assert reply["morph_t"] == 1.0
    assert reply["module_count"] == session.scene.network_b.module_count
    assert len(pushes) == 1

    reply, pushes = session.handle({"type": "snap", "seq": 8, "direction": "left"})
    assert reply["type"] == "reply" and len(pushes) == 1

    reply, pushes = session.handle({
        "type": "twohand", "seq": 9,
        "l0": [-1, 0, 0], "r0": [1, 0, 0], "l1": [-2, 0, 0], "r1": [2, 0, 0],
    })
    assert reply["type"] == "reply" and len(pushes) == 1


def test_server_seq_is_monotonic_per_push(data_dir):
    session = loaded_session(data_dir)
    seqs = []
    for i, delta in enumerate(([1, 0, 0], [0, 1, 0], [0, 0, 1])):
        _, pushes = session.handle({"type": "translate", "seq": 20 + i, "delta": delta})
        seqs.append(pushes[0][0]["server_seq"])
    assert seqs == [2, 3, 4]  # load consumed server_seq 1


def test_errors_leave_state_untouched_and_push_nothing(data_dir):
    session = loaded_session(data_dir, with_b=True)
    session.handle({"type": "select", "seq": 1,
                    "name": session.scene.network_a.nodes[0].name})
    before = (
        session.scene.selection,
        session.scene.morph_t,
        session.scene.transform.translation.copy(),
        session.server_seq,
    )
    bad = [
        {"type": "morph", "seq": 2, "t": 2.5},
        {"type": "morph", "seq": 3, "t": float("nan")},
        {"type": "select", "seq": 4, "name": "no-such-gene"},
        {"type": "filter", "seq": 5, "mask": [True]},
        {"type": "translate", "seq": 6, "delta": [1.0, None, 0.0]},
        {"type": "snap", "seq": 7, "direction": "up"},
        {"type": "pick", "seq": 8, "origin": [0, 0, 0], "direction": [0, 0, 0]},
    ]
    for msg in bad:
        reply, pushes = session.handle(msg)
        assert reply["type"] == "error", msg
        assert pushes == []
    assert session.scene.selection == before[0]
    assert session.scene.morph_t == before[1]
    np.testing.assert_array_equal(session.scene.transform.translation, before[2])
    assert session.server_seq == before[3]


def test_delta_after_reselect_is_incremental_for_superset(data_dir):
    """Selecting while segments regenerate amortized would grow the set; over
    the eager service path a fresh selection resets, but a repeated snapshot
    with unchanged state sends no segments at all."""
    session = loaded_session(data_dir)
    name = session.scene.network_a.nodes[0].name
    _, first = session.handle({"type": "select", "seq": 1, "name": name})
    assert first[0][0]["segments_reset"] is True
    # same selection, no movement: the segment set is unchanged, so the
    # delta carries nothing new
    _, second = session.handle({"type": "snapshot", "seq": 2})
    assert second[0][0]["segments_reset"] is True  # snapshot always resends
    _, third = session.handle({"type": "filter", "seq": 3,
                               "mask": [True] * session.scene.network_a.module_count})
    assert third[0][0]["segments_reset"] is False
    assert third[0][0]["segments"] == []


def test_translate_changes_world_segments_forcing_reset(data_dir):
    session = loaded_session(data_dir)
    name = session.scene.network_a.nodes[0].name
    session.handle({"type": "select", "seq": 1, "name": name})
    _, pushes = session.handle({"type": "translate", "seq": 2, "delta": [5, 0, 0]})
    header = pushes[0][0]
    if session.scene.network_a.degree(0) > 0:
        assert header["segments_reset"] is True


# -- morph coalescing ------------------------------------------------------------


def test_mark_coalesced_keeps_last_of_each_run():
    batch = [
        {"type": "morph", "t": 0.1},
        {"type": "morph", "t": 0.2},
        {"type": "morph", "t": 0.3},
        {"type": "translate"},
        {"type": "morph", "t": 0.4},
        {"type": "snapshot"},
        {"type": "morph", "t": 0.5},
    ]
    assert mark_coalesced(batch) == [False, False, True, True, True, True, True]


def test_mark_coalesced_single_messages_untouched():
    assert mark_coalesced([{"type": "morph", "t": 1}]) == [True]
    assert mark_coalesced([]) == []
    assert mark_coalesced([{"type": "select"}, {"type": "morph"}]) == [True, True]


# -- replay determinism -----------------------------------------------------------


def scripted_messages(data_dir, count=500, seed=123):
    rng = np.random.default_rng(seed)
    net_a = generate_synthetic(60, 150, 4, seed=7)
    net_b = generate_synthetic(50, 120, 5, seed=8)
    msgs = [load_msg(seq=0, with_b=True)]
    for seq in range(1, count):
        roll = rng.random()
        if roll < 0.2:
            msgs.append({"type": "translate", "seq": seq,
                         "delta": [float(x) for x in rng.uniform(-2, 2, 3)]})
        elif roll < 0.35:
            msgs.append({"type": "morph", "seq": seq,
                         "t": float(rng.choice([0.0, 0.3, 0.5, 0.8, 1.0]))})
        elif roll < 0.55:
            net = net_a if roll < 0.45 else net_b
            name = net.nodes[int(rng.integers(net.node_count))].name
            msgs.append({"type": "select", "seq": seq, "name": name})
        elif roll < 0.65:
            msgs.append({"type": "select", "seq": seq, "name": None})
        elif roll < 0.75:
            k = int(rng.integers(3, 6))
            msgs.append({"type": "filter", "seq": seq,
                         "mask": [bool(b) for b in rng.random(k) > 0.3]})
        elif roll < 0.85:
            msgs.append({"type": "pick", "seq": seq,
                         "origin": [float(x) for x in rng.uniform(-50, 50, 3)],
                         "direction": [0.0, 0.0, -1.0]})
        elif roll < 0.95:
            msgs.append({"type": "snap", "seq": seq,
                         "direction": "left" if rng.random() < 0.5 else "right"})
        else:
            msgs.append({"type": "snapshot", "seq": seq})
    return msgs


def transcript(data_dir, msgs):
    session = Session(data_dir)
    out = []
    for msg in msgs:
        reply, pushes = session.handle(msg)
        out.append(json.dumps(reply, sort_keys=True))
        for header, blob in pushes:
            out.append(json.dumps(header, sort_keys=True))
            out.append(blob.hex())
    return out


def test_replaying_a_session_reproduces_the_transcript(data_dir):
    msgs = scripted_messages(data_dir)
    assert len(msgs) == 500
    first = transcript(data_dir, msgs)
    second = transcript(data_dir, msgs)
    assert first == second


# -- websocket transport -----------------------------------------------------------


def recv_reply(ws, pushes=0):
    """Read one reply, then the expected pushes (reply precedes its pushes)."""
    reply = json.loads(ws.receive_text())
    assert reply["type"] != "frame-delta"
    got = []
    for _ in range(pushes):
        header = json.loads(ws.receive_text())
        assert header["type"] == "frame-delta"
        got.append((header, ws.receive_bytes()))
    return reply, got


def test_websocket_round_trip(data_dir):
    client = TestClient(create_app(data_dir))
    with client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps(load_msg(seq=1)))
        reply = json.loads(ws.receive_text())
        assert reply["type"] == "reply" and reply["seq"] == 1
        header = json.loads(ws.receive_text())
        assert header["type"] == "frame-delta"
        blob = ws.receive_bytes()
        ids, _, _, _ = decode_geometry(blob)
        assert len(ids) == 60

        ws.send_text(json.dumps({"type": "pick", "seq": 2,
                                 "origin": [0, 0, 500], "direction": [0, 0, -1]}))
        reply, pushes = recv_reply(ws)
        assert reply["seq"] == 2 and pushes == []


def test_websocket_malformed_json_gets_error_with_null_seq(data_dir):
    client = TestClient(create_app(data_dir))
    with client.websocket_connect("/ws") as ws:
        ws.send_text("{not json")
        reply = json.loads(ws.receive_text())
        assert reply["type"] == "error"
        assert reply["seq"] is None

        ws.send_text(json.dumps(load_msg(seq=1)))
        reply, pushes = recv_reply(ws, pushes=1)
        assert reply["type"] == "reply"
        assert len(pushes) == 1


def test_websocket_error_does_not_break_session(data_dir):
    client = TestClient(create_app(data_dir))
    with client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps(load_msg(seq=1)))
        recv_reply(ws, pushes=1)
        ws.send_text(json.dumps({"type": "morph", "seq": 2, "t": 7.0}))
        reply, pushes = recv_reply(ws)
        assert reply["type"] == "error" and pushes == []
        ws.send_text(json.dumps({"type": "snapshot", "seq": 3}))
        reply, pushes = recv_reply(ws, pushes=1)
        assert reply["type"] == "reply" and reply["morph_t"] == 0.0


def test_websocket_morph_burst_coalesces(data_dir):
    """A burst of morph messages produces one reply each, but absorbed ones are
    tagged and only surviving applications push geometry."""
    client = TestClient(create_app(data_dir))
    with client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps(load_msg(seq=0, with_b=True)))
        recv_reply(ws, pushes=1)
        burst = 30
        for i in range(burst):
            ws.send_text(json.dumps(
                {"type": "morph", "seq": 100 + i, "t": (i + 1) / burst}
            ))
        replies, pushes = [], []
        while len(replies) < burst:
            msg = json.loads(ws.receive_text())
            if msg["type"] == "frame-delta":
                pushes.append((msg, ws.receive_bytes()))
            else:
                replies.append(msg)
        assert [r["seq"] for r in replies] == [100 + i for i in range(burst)]
        coalesced = [r for r in replies if r.get("coalesced")]
        applied = [r for r in replies if not r.get("coalesced")]
        while len(pushes) < len(applied):  # trailing push of the final apply
            msg = json.loads(ws.receive_text())
            assert msg["type"] == "frame-delta"
            pushes.append((msg, ws.receive_bytes()))
        assert len(coalesced) + len(applied) == burst
        assert len(pushes) == len(applied)
        assert all(r["type"] == "reply" for r in replies)

        ws.send_text(json.dumps({"type": "snapshot", "seq": 999}))
        reply, _ = recv_reply(ws)
        assert reply["morph_t"] == 1.0  # the final burst value won
