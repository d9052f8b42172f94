// Input mapping: DOM-level events in, protocol messages out. Pure against
// (state, camera) so a recorded event log replays to an identical message
// transcript. Sending and reply handling live in the caller.

import { FlyCamera, Vec3 } from './camera.js';
import { Outgoing } from './protocol.js';
import { ViewerState } from './state.js';

export type { Outgoing };

export type InputEvent =
  | { kind: 'checkbox'; module: number; checked: boolean }
  | { kind: 'slider'; t: number }
  | { kind: 'tick' }  // animation frame boundary; flushes the morph throttle
  | { kind: 'click'; x: number; y: number; width: number; height: number }
  | { kind: 'key'; key: string }
  | { kind: 'drag'; dx: number; dy: number; modifier: boolean }
  | {
      kind: 'pairdrag';
      l0: [number, number, number]; r0: [number, number, number];
      l1: [number, number, number]; r1: [number, number, number];
    }
  | { kind: 'groundclick'; target: Vec3 };

const TRANSLATE_PER_PIXEL = 0.25;

export class InputMapper {
  private pendingMorph: number | null = null;

  /** Set when an input was dropped (disconnected, or selection gated). */
  notice: string | null = null;

  constructor(private state: ViewerState, private camera: FlyCamera) {}

  /** Cursor affordance: node clicking is grayed out mid-morph. */
  get cursorStyle(): 'default' | 'not-allowed' {
    return this.state.selectionAllowed ? 'default' : 'not-allowed';
  }

  apply(event: InputEvent): Outgoing[] {
    if (!this.state.connected && event.kind !== 'tick') {
      this.notice = 'disconnected: input ignored';
      return [];
    }
    switch (event.kind) {
      case 'checkbox': {
        const mask = this.state.acked.filter.slice();
        if (event.module < 0 || event.module >= mask.length) return [];
        mask[event.module] = event.checked;
        return [{ type: 'filter', mask }];
      }
      case 'slider': {
        // collapse slider spam; the next tick emits at most one morph
        this.pendingMorph = clamp01(event.t);
        return [];
      }
      case 'tick': {
        if (this.pendingMorph === null) return [];
        const t = this.pendingMorph;
        this.pendingMorph = null;
        return [{ type: 'morph', t }];
      }
      case 'click': {
        if (!this.state.selectionAllowed) {
          this.notice = 'selection is disabled while morphing';
          return [];
        }
        const ray = this.camera.rayThrough(event.x, event.y, event.width, event.height);
        return [{ type: 'pick', origin: ray.origin, direction: ray.direction }];
      }
      case 'key': {
        if (event.key === 'q' || event.key === 'Q') {
          return [{ type: 'snap', direction: 'left' }];
        }
        if (event.key === 'e' || event.key === 'E') {
          return [{ type: 'snap', direction: 'right' }];
        }
        return [];
      }
      case 'drag': {
        if (!event.modifier) {
          this.camera.look(-event.dx * 0.3, -event.dy * 0.3);
          return [];
        }
        const r = this.camera.right();
        const f = this.camera.forward();
        const up = {
          x: r.y * f.z - r.z * f.y,
          y: r.z * f.x - r.x * f.z,
          z: r.x * f.y - r.y * f.x,
        };
        const k = TRANSLATE_PER_PIXEL;
        return [{
          type: 'translate',
          delta: [
            r.x * event.dx * k - up.x * event.dy * k,
            r.y * event.dx * k - up.y * event.dy * k,
            r.z * event.dx * k - up.z * event.dy * k,
          ],
        }];
      }
      case 'pairdrag': {
        return [{ type: 'twohand', l0: event.l0, r0: event.r0, l1: event.l1, r1: event.r1 }];
      }
      case 'groundclick': {
        this.camera.jumpTo(event.target);
        return [];
      }
    }
  }

  /**
   * Completes a click: the pick reply names a node (select it) or nothing
   * (clear the selection). Gating is re-checked because a morph may have
   * been acknowledged while the pick was in flight.
   */
  resolvePick(node: string | null | undefined): Outgoing[] {
    if (!this.state.selectionAllowed) {
      this.notice = 'selection is disabled while morphing';
      return [];
    }
    return [{ type: 'select', name: node ?? null }];
  }
}

function clamp01(t: number): number {
  return Math.max(0, Math.min(1, t));
}
