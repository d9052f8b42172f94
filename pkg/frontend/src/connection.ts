// WebSocket session client: sequence-matched request/reply, a latest-frame
// mailbox decoupling network receipt from rendering, and reconnect that
// replays the load plus the acked state so the displayed scene survives.

import {
  FrameDelta,
  GeometryBlock,
  Reply,
  ErrorReply,
  Request,
  Outgoing,
  decodeGeometry,
  parseServerMessage,
} from './protocol.js';

// Narrow surface shared by browser WebSocket and the `ws` package.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  binaryType: string;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = () => SocketLike;

/** A decoded frame push: header plus node instances. */
export interface ViewFrame {
  header: FrameDelta;
  nodes: GeometryBlock;
}

export type Settled = Reply | ErrorReply;

interface Pending {
  resolve: (reply: Settled) => void;
  reject: (err: Error) => void;
}

export class SessionClient {
  private socket: SocketLike | null = null;
  private nextSeq = 1;
  private pending = new Map<number, Pending>();
  private pendingHeader: FrameDelta | null = null;
  private mailbox: ViewFrame | null = null;
  private lastServerSeq = 0;

  onConnectionChange: ((open: boolean) => void) | null = null;
  onFrame: ((frame: ViewFrame) => void) | null = null;

  constructor(private factory: SocketFactory) {}

  get isOpen(): boolean {
    return this.socket !== null;
  }

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = this.factory();
      socket.binaryType = 'arraybuffer';
      socket.onopen = () => {
        this.socket = socket;
        this.onConnectionChange?.(true);
        resolve();
      };
      socket.onerror = () => {
        if (this.socket !== socket) reject(new Error('connection failed'));
      };
      socket.onclose = () => {
        if (this.socket === socket) {
          this.socket = null;
          this.failAllPending('connection closed');
          this.onConnectionChange?.(false);
        }
      };
      socket.onmessage = (ev) => this.handleMessage(ev.data);
    });
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
  }

  /** Send one request; resolves with the matching reply or error message. */
  request(msg: Outgoing): Promise<Settled> {
    if (!this.socket) {
      return Promise.reject(new Error('not connected'));
    }
    const seq = this.nextSeq++;
    const full = { ...msg, seq } as Request;
    const promise = new Promise<Settled>((resolve, reject) => {
      this.pending.set(seq, { resolve, reject });
    });
    this.socket.send(JSON.stringify(full));
    return promise;
  }

  /**
   * Latest unrendered frame, or null. Taking it empties the mailbox; newer
   * frames replace older unrendered ones so rendering never falls behind.
   */
  takeFrame(): ViewFrame | null {
    const frame = this.mailbox;
    this.mailbox = null;
    return frame;
  }

  peekFrame(): ViewFrame | null {
    return this.mailbox;
  }

  private handleMessage(data: unknown): void {
    if (typeof data === 'string') {
      const msg = parseServerMessage(data);
      if (msg.type === 'frame-delta') {
        this.pendingHeader = msg;
        return;
      }
      const seq = msg.seq;
      if (seq !== null && this.pending.has(seq)) {
        const waiter = this.pending.get(seq)!;
        this.pending.delete(seq);
        waiter.resolve(msg);
      }
      return;
    }
    // binary geometry block completes the announced frame header
    const buffer = toArrayBuffer(data);
    if (!this.pendingHeader || buffer === null) return;
    const header = this.pendingHeader;
    this.pendingHeader = null;
    if (header.server_seq <= this.lastServerSeq) return; // stale after reconnect race
    this.lastServerSeq = header.server_seq;
    const frame: ViewFrame = { header, nodes: decodeGeometry(buffer) };
    this.mailbox = frame;
    this.onFrame?.(frame);
  }

  private failAllPending(reason: string): void {
    for (const waiter of this.pending.values()) {
      waiter.reject(new Error(reason));
    }
    this.pending.clear();
    this.pendingHeader = null;
  }
}

function toArrayBuffer(data: unknown): ArrayBuffer | null {
  if (data instanceof ArrayBuffer) return data;
  if (ArrayBuffer.isView(data)) {
    const view = data as Uint8Array;
    return view.buffer.slice(view.byteOffset, view.byteOffset + view.byteLength) as ArrayBuffer;
  }
  return null;
}
