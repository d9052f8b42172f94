// Wire protocol: JSON request/reply messages plus the binary geometry block
// that follows every frame-delta header.
//
// Every request carries a client seq; the server answers each request with
// exactly one reply or error echoing it. Frame deltas arrive on the server's
// own channel with a monotonically increasing server_seq.

export interface LoadRequest {
  type: 'load';
  seq: number;
  nodesA: string;
  edgesA: string;
  layoutA: string;
  nodesB?: string;
  edgesB?: string;
  layoutB?: string;
}

export interface SnapshotRequest { type: 'snapshot'; seq: number }
export interface PickRequest {
  type: 'pick'; seq: number;
  origin: [number, number, number];
  direction: [number, number, number];
}
export interface SelectRequest { type: 'select'; seq: number; name: string | null }
export interface FilterRequest { type: 'filter'; seq: number; mask: boolean[] }
export interface MorphRequest { type: 'morph'; seq: number; t: number }
export interface TranslateRequest {
  type: 'translate'; seq: number; delta: [number, number, number];
}
export interface TwoHandRequest {
  type: 'twohand'; seq: number;
  l0: [number, number, number]; r0: [number, number, number];
  l1: [number, number, number]; r1: [number, number, number];
}
export interface SnapRequest { type: 'snap'; seq: number; direction: 'left' | 'right' }

export type Request =
  | LoadRequest | SnapshotRequest | PickRequest | SelectRequest
  | FilterRequest | MorphRequest | TranslateRequest | TwoHandRequest
  | SnapRequest;

type DistributedOmit<T, K extends PropertyKey> = T extends unknown ? Omit<T, K> : never;

/** A request before the client assigns its sequence number. */
export type Outgoing = DistributedOmit<Request, 'seq'>;

export interface ModuleMeta {
  id: number;
  label: string;
  color: [number, number, number];
  count: number;
}

export interface NetworkMeta {
  nodes: number;
  edges: number;
  modules: ModuleMeta[];
}

/** Scene summary fields present on every mutating reply. */
export interface SceneSummary {
  selection: string | null;
  morph_t: number;
  filter: boolean[];
  module_count: number;
  visible_count: number;
}

export interface Reply extends Partial<SceneSummary> {
  type: 'reply';
  op: string;
  seq: number;
  coalesced?: boolean;
  node?: string | null;
  network_a?: NetworkMeta;
  network_b?: NetworkMeta | null;
  node_size?: number;
}

export interface ErrorReply {
  type: 'error';
  seq: number | null;
  message: string;
}

export interface SegmentWire {
  a: [number, number, number];
  b: [number, number, number];
  color: [number, number, number];
  thickness: number;
  neighbor: string;
}

export interface FrameDelta {
  type: 'frame-delta';
  channel: 'geometry';
  server_seq: number;
  segments_reset: boolean;
  segments: SegmentWire[];
  labels: [string, [number, number, number]][];
  new_segments: number;
  node_count: number;
}

export type ServerMessage = Reply | ErrorReply | FrameDelta;

/** Node instances decoded from the binary block of a frame push. */
export interface GeometryBlock {
  ids: Uint32Array;
  positions: Float32Array;  // xyz per instance
  colors: Float32Array;     // rgb per instance
  scales: Float32Array;
}

// Layout: u32 count | u32*n ids | f32*3n positions | f32*3n colors | f32*n scales,
// all little-endian.
export function decodeGeometry(buffer: ArrayBuffer): GeometryBlock {
  const view = new DataView(buffer);
  const count = view.getUint32(0, true);
  const expected = 4 + count * (4 + 12 + 12 + 4);
  if (buffer.byteLength !== expected) {
    throw new Error(`geometry block is ${buffer.byteLength} bytes, expected ${expected}`);
  }
  let offset = 4;
  const ids = new Uint32Array(count);
  const positions = new Float32Array(count * 3);
  const colors = new Float32Array(count * 3);
  const scales = new Float32Array(count);
  for (let i = 0; i < count; i++, offset += 4) ids[i] = view.getUint32(offset, true);
  for (let i = 0; i < count * 3; i++, offset += 4) positions[i] = view.getFloat32(offset, true);
  for (let i = 0; i < count * 3; i++, offset += 4) colors[i] = view.getFloat32(offset, true);
  for (let i = 0; i < count; i++, offset += 4) scales[i] = view.getFloat32(offset, true);
  return { ids, positions, colors, scales };
}

export function parseServerMessage(text: string): ServerMessage {
  const msg = JSON.parse(text) as ServerMessage;
  if (msg.type !== 'reply' && msg.type !== 'error' && msg.type !== 'frame-delta') {
    throw new Error(`unexpected server message type ${(msg as { type: string }).type}`);
  }
  return msg;
}
