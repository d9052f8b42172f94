import { describe, expect, it } from 'vitest';
import { SessionClient, SocketLike } from '../src/connection.js';
import { FrameDelta } from '../src/protocol.js';

class FakeSocket implements SocketLike {
  binaryType = 'blob';
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  sent: string[] = [];
  closed = false;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  // test-side drivers
  open(): void {
    this.onopen?.();
  }

  receive(data: unknown): void {
    this.onmessage?.({ data });
  }
}

async function openClient(): Promise<{ client: SessionClient; socket: FakeSocket }> {
  const socket = new FakeSocket();
  const client = new SessionClient(() => socket);
  const connected = client.connect();
  socket.open();
  await connected;
  return { client, socket };
}

function packGeometry(ids: number[], fill: number): ArrayBuffer {
  const n = ids.length;
  const buffer = new ArrayBuffer(4 + n * 32);
  const view = new DataView(buffer);
  view.setUint32(0, n, true);
  let offset = 4;
  for (const id of ids) { view.setUint32(offset, id, true); offset += 4; }
  for (let i = 0; i < n * 7; i++) { view.setFloat32(offset, fill, true); offset += 4; }
  return buffer;
}

function header(serverSeq: number): string {
  const msg: FrameDelta = {
    type: 'frame-delta',
    channel: 'geometry',
    server_seq: serverSeq,
    segments_reset: true,
    segments: [],
    labels: [],
    new_segments: 0,
    node_count: 1,
  };
  return JSON.stringify(msg);
}

describe('request round trips', () => {
  it('assigns increasing seqs and resolves the matching waiter', async () => {
    const { client, socket } = await openClient();
    expect(socket.binaryType).toBe('arraybuffer');

    const first = client.request({ type: 'snapshot' });
    const second = client.request({ type: 'morph', t: 0.5 });
    expect(socket.sent.map((s) => JSON.parse(s).seq)).toEqual([1, 2]);

    // out-of-order replies still land on the right promise
    socket.receive(JSON.stringify({ type: 'reply', op: 'morph', seq: 2, morph_t: 0.5 }));
    socket.receive(JSON.stringify({ type: 'reply', op: 'snapshot', seq: 1 }));
    expect((await second).type).toBe('reply');
    expect((await first) as { op?: string }).toMatchObject({ op: 'snapshot' });
  });

  it('error replies settle the promise instead of hanging it', async () => {
    const { client, socket } = await openClient();
    const pending = client.request({ type: 'morph', t: 2 });
    socket.receive(JSON.stringify({ type: 'error', seq: 1, message: 'morph t must lie in [0, 1]' }));
    const settled = await pending;
    expect(settled.type).toBe('error');
  });

  it('rejects immediately when not connected', async () => {
    const client = new SessionClient(() => new FakeSocket());
    await expect(client.request({ type: 'snapshot' })).rejects.toThrow(/not connected/);
  });

  it('rejects in-flight requests when the socket closes', async () => {
    const { client, socket } = await openClient();
    let opens = 0;
    let closes = 0;
    client.onConnectionChange = (open) => (open ? opens++ : closes++);
    const pending = client.request({ type: 'snapshot' });
    socket.close();
    await expect(pending).rejects.toThrow(/closed/);
    expect(client.isOpen).toBe(false);
    expect(closes).toBe(1);
  });
});

describe('frame mailbox', () => {
  it('pairs each header with the following binary block', async () => {
    const { client, socket } = await openClient();
    socket.receive(header(1));
    expect(client.peekFrame()).toBeNull(); // header alone is not a frame
    socket.receive(packGeometry([7], 0.5));

    const frame = client.takeFrame();
    expect(frame).not.toBeNull();
    expect(frame!.header.server_seq).toBe(1);
    expect(Array.from(frame!.nodes.ids)).toEqual([7]);
    expect(client.takeFrame()).toBeNull(); // taking empties the mailbox
  });

  it('keeps only the newest unrendered frame', async () => {
    const { client, socket } = await openClient();
    socket.receive(header(1));
    socket.receive(packGeometry([1], 0));
    socket.receive(header(2));
    socket.receive(packGeometry([2], 0));

    const frame = client.takeFrame();
    expect(frame!.header.server_seq).toBe(2);
    expect(Array.from(frame!.nodes.ids)).toEqual([2]);
    expect(client.takeFrame()).toBeNull();
  });

  it('drops frames whose server_seq does not advance', async () => {
    const { client, socket } = await openClient();
    socket.receive(header(5));
    socket.receive(packGeometry([5], 0));
    client.takeFrame();

    socket.receive(header(5)); // duplicate
    socket.receive(packGeometry([9], 0));
    expect(client.takeFrame()).toBeNull();

    socket.receive(header(6));
    socket.receive(packGeometry([6], 0));
    expect(client.takeFrame()!.header.server_seq).toBe(6);
  });

  it('accepts typed-array payloads as node buffers do', async () => {
    const { client, socket } = await openClient();
    socket.receive(header(1));
    socket.receive(new Uint8Array(packGeometry([3], 1.5)));
    const frame = client.takeFrame();
    expect(Array.from(frame!.nodes.ids)).toEqual([3]);
    expect(frame!.nodes.scales[0]).toBeCloseTo(1.5, 6);
  });

  it('notifies onFrame as frames arrive', async () => {
    const { client, socket } = await openClient();
    const seen: number[] = [];
    client.onFrame = (frame) => seen.push(frame.header.server_seq);
    socket.receive(header(1));
    socket.receive(packGeometry([1], 0));
    socket.receive(header(2));
    socket.receive(packGeometry([2], 0));
    expect(seen).toEqual([1, 2]);
  });
});
