// Viewer-side mirror of the session. Controls always reflect the last
// server-acknowledged state: nothing here updates optimistically.

import { ViewFrame } from './connection.js';
import { NetworkMeta, Reply } from './protocol.js';

export interface AckedScene {
  selection: string | null;
  morphT: number;
  filter: boolean[];
  moduleCount: number;
  visibleCount: number;
}

export class ViewerState {
  connected = false;
  networkA: NetworkMeta | null = null;
  networkB: NetworkMeta | null = null;
  nodeSize = 0.5;
  acked: AckedScene = {
    selection: null,
    morphT: 0,
    filter: [],
    moduleCount: 0,
    visibleCount: 0,
  };
  /** Frame currently on screen (after the renderer consumed the mailbox). */
  displayed: ViewFrame | null = null;

  get drawnInstanceCount(): number {
    return this.displayed ? this.displayed.nodes.ids.length : 0;
  }

  get morphInterior(): boolean {
    return this.acked.morphT > 0 && this.acked.morphT < 1;
  }

  /** Selection is only possible when fully on one network. */
  get selectionAllowed(): boolean {
    return this.connected && !this.morphInterior;
  }

  applyReply(reply: Reply): void {
    if (reply.network_a !== undefined) this.networkA = reply.network_a;
    if (reply.network_b !== undefined) this.networkB = reply.network_b ?? null;
    if (reply.node_size !== undefined) this.nodeSize = reply.node_size;
    if (reply.coalesced) return; // absorbed morphs carry no state
    if (reply.selection !== undefined) this.acked.selection = reply.selection;
    if (reply.morph_t !== undefined) this.acked.morphT = reply.morph_t;
    if (reply.filter !== undefined) this.acked.filter = reply.filter.slice();
    if (reply.module_count !== undefined) this.acked.moduleCount = reply.module_count;
    if (reply.visible_count !== undefined) this.acked.visibleCount = reply.visible_count;
  }

  markDisplayed(frame: ViewFrame): void {
    this.displayed = frame;
  }
}
