// Entry point: wires connection, state mirror, input mapping, and renderer
// into a single UI event loop. Server address comes from ?host=&port=.

import { FlyCamera } from './camera.js';
import { SessionClient, SocketLike } from './connection.js';
import { InputMapper, Outgoing } from './controls.js';
import { Reply } from './protocol.js';
import { Renderer } from './renderer.js';
import { ViewerState } from './state.js';

interface LoadConfig {
  nodesA: string; edgesA: string; layoutA: string;
  nodesB?: string; edgesB?: string; layoutB?: string;
}

function serverUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const host = params.get('host') ?? window.location.hostname ?? '127.0.0.1';
  const port = params.get('port') ?? '8000';
  return `ws://${host}:${port}/ws`;
}

function loadConfig(): LoadConfig {
  const params = new URLSearchParams(window.location.search);
  const cfg: LoadConfig = {
    nodesA: params.get('nodesA') ?? 'nodesA.csv',
    edgesA: params.get('edgesA') ?? 'edgesA.csv',
    layoutA: params.get('layoutA') ?? 'layoutA.csv',
  };
  const nodesB = params.get('nodesB');
  if (nodesB) {
    cfg.nodesB = nodesB;
    cfg.edgesB = params.get('edgesB') ?? 'edgesB.csv';
    cfg.layoutB = params.get('layoutB') ?? 'layoutB.csv';
  }
  return cfg;
}

class ViewerApp {
  private state = new ViewerState();
  private camera = new FlyCamera();
  private mapper = new InputMapper(this.state, this.camera);
  private client: SessionClient;
  private renderer: Renderer;
  private banner: HTMLElement;
  private panel: HTMLElement;
  private slider: HTMLInputElement;
  private labels: [string, [number, number, number]][] = [];
  private keysDown = new Set<string>();

  constructor(private config: LoadConfig) {
    this.client = new SessionClient(() => new WebSocket(serverUrl()) as SocketLike);
    const canvas = document.getElementById('view') as HTMLCanvasElement;
    const labelLayer = document.getElementById('labels')!;
    this.renderer = new Renderer(canvas, labelLayer);
    this.banner = document.getElementById('banner')!;
    this.panel = document.getElementById('modules')!;
    this.slider = document.getElementById('morph') as HTMLInputElement;
    this.bindInputs(canvas);
    this.client.onConnectionChange = (open) => {
      this.state.connected = open;
      this.banner.style.display = open ? 'none' : 'block';
      if (!open) setTimeout(() => void this.reconnect(), 1000);
    };
  }

  async start(): Promise<void> {
    await this.client.connect();
    this.state.connected = true;
    const reply = await this.client.request({ type: 'load', ...this.config });
    this.absorb(reply as Reply);
    this.buildModulePanel();
    const loop = () => {
      this.tick();
      requestAnimationFrame(loop);
    };
    requestAnimationFrame(loop);
  }

  /** Reconnects and replays acked state so the displayed scene is identical. */
  private async reconnect(): Promise<void> {
    try {
      await this.client.connect();
    } catch {
      setTimeout(() => void this.reconnect(), 1000);
      return;
    }
    this.state.connected = true;
    // copy before the load reply overwrites the mirror with fresh defaults
    const acked = { ...this.state.acked, filter: this.state.acked.filter.slice() };
    this.absorb(await this.client.request({ type: 'load', ...this.config }) as Reply);
    if (acked.filter.length) {
      this.absorb(await this.client.request({ type: 'filter', mask: acked.filter }) as Reply);
    }
    if (acked.morphT !== 0) {
      this.absorb(await this.client.request({ type: 'morph', t: acked.morphT }) as Reply);
    }
    if (acked.selection !== null) {
      this.absorb(await this.client.request({ type: 'select', name: acked.selection }) as Reply);
    }
    this.absorb(await this.client.request({ type: 'snapshot' }) as Reply);
    this.buildModulePanel();
  }

  private tick(): void {
    this.moveCamera();
    for (const msg of this.mapper.apply({ kind: 'tick' })) this.send(msg);
    const frame = this.client.takeFrame();
    if (frame) {
      this.state.markDisplayed(frame);
      this.renderer.loadFrame(frame);
      this.labels = frame.header.labels;
    }
    document.body.style.cursor = this.mapper.cursorStyle;
    if (this.mapper.notice) {
      this.banner.textContent = this.mapper.notice;
      this.banner.style.display = 'block';
      this.mapper.notice = null;
      setTimeout(() => {
        if (this.state.connected) this.banner.style.display = 'none';
      }, 1500);
    }
    this.renderer.draw(this.camera, this.labels);
  }

  private moveCamera(): void {
    const speed = 2.0;
    let forward = 0, right = 0, up = 0;
    if (this.keysDown.has('w')) forward += speed;
    if (this.keysDown.has('s')) forward -= speed;
    if (this.keysDown.has('d')) right += speed;
    if (this.keysDown.has('a')) right -= speed;
    if (this.keysDown.has('r')) up += speed;
    if (this.keysDown.has('f')) up -= speed;
    if (forward || right || up) this.camera.move(forward, right, up);
  }

  private send(msg: Outgoing): void {
    this.client.request(msg).then((reply) => {
      if (reply.type === 'error') {
        console.warn('server rejected', msg.type, reply.message);
        return;
      }
      this.absorb(reply);
      if (msg.type === 'pick') {
        for (const follow of this.mapper.resolvePick(reply.node)) this.send(follow);
      }
    }).catch(() => { /* connection dropped; reconnect path takes over */ });
  }

  private absorb(reply: Reply | { type: 'error'; message: string }): void {
    if (reply.type === 'error') {
      console.warn('request failed:', reply.message);
      return;
    }
    this.state.applyReply(reply);
    this.slider.value = String(this.state.acked.morphT);
    this.refreshChecks();
  }

  private buildModulePanel(): void {
    this.panel.textContent = '';
    const net = this.state.networkA;
    if (!net) return;
    net.modules.forEach((mod) => {
      const row = document.createElement('label');
      row.className = 'module-row';
      const box = document.createElement('input');
      box.type = 'checkbox';
      box.checked = this.state.acked.filter[mod.id] ?? true;
      box.dataset.module = String(mod.id);
      box.addEventListener('change', () => {
        for (const msg of this.mapper.apply(
          { kind: 'checkbox', module: mod.id, checked: box.checked })) {
          this.send(msg);
        }
      });
      const swatch = document.createElement('span');
      swatch.className = 'swatch';
      swatch.style.background =
        `rgb(${mod.color.map((c) => Math.round(c * 255)).join(',')})`;
      row.append(box, swatch, `${mod.label} (${mod.count})`);
      this.panel.appendChild(row);
    });
  }

  private refreshChecks(): void {
    this.panel.querySelectorAll('input[type=checkbox]').forEach((el) => {
      const box = el as HTMLInputElement;
      const idx = Number(box.dataset.module);
      box.checked = this.state.acked.filter[idx] ?? true;
    });
  }

  private bindInputs(canvas: HTMLCanvasElement): void {
    this.slider.addEventListener('input', () => {
      this.mapper.apply({ kind: 'slider', t: Number(this.slider.value) });
    });
    canvas.addEventListener('click', (ev) => {
      if (ev.shiftKey || ev.ctrlKey) return;
      const rect = canvas.getBoundingClientRect();
      const x = ev.clientX - rect.left;
      const y = ev.clientY - rect.top;
      if (ev.altKey) {
        // teleport analog: jump toward the clicked direction at cloud depth
        const ray = this.camera.rayThrough(x, y, rect.width, rect.height);
        this.mapper.apply({
          kind: 'groundclick',
          target: {
            x: ray.origin[0] + ray.direction[0] * 120,
            y: ray.origin[1] + ray.direction[1] * 120,
            z: ray.origin[2] + ray.direction[2] * 120,
          },
        });
        return;
      }
      for (const msg of this.mapper.apply(
        { kind: 'click', x, y, width: rect.width, height: rect.height })) {
        this.send(msg);
      }
    });
    let dragging = false;
    canvas.addEventListener('mousedown', () => { dragging = true; });
    window.addEventListener('mouseup', () => { dragging = false; });
    canvas.addEventListener('mousemove', (ev) => {
      if (!dragging || (ev.movementX === 0 && ev.movementY === 0)) return;
      for (const msg of this.mapper.apply(
        { kind: 'drag', dx: ev.movementX, dy: ev.movementY, modifier: ev.shiftKey })) {
        this.send(msg);
      }
    });
    window.addEventListener('keydown', (ev) => {
      this.keysDown.add(ev.key.toLowerCase());
      for (const msg of this.mapper.apply({ kind: 'key', key: ev.key })) {
        this.send(msg);
      }
      if (ev.key === '[') this.camera.snapYaw('left');
      if (ev.key === ']') this.camera.snapYaw('right');
    });
    window.addEventListener('keyup', (ev) => {
      this.keysDown.delete(ev.key.toLowerCase());
    });
    canvas.addEventListener('wheel', (ev) => {
      ev.preventDefault();
      // wheel scales about the screen center through the paired-hand gesture
      const factor = ev.deltaY < 0 ? 1.05 : 1 / 1.05;
      const half = 1.0;
      for (const msg of this.mapper.apply({
        kind: 'pairdrag',
        l0: [-half, 0, 0], r0: [half, 0, 0],
        l1: [-half * factor, 0, 0], r1: [half * factor, 0, 0],
      })) {
        this.send(msg);
      }
    }, { passive: false });
  }
}

const app = new ViewerApp(loadConfig());
void app.start();
