// Session channel client: delivers server messages exactly once and in seq
// order, queues outgoing messages while disconnected, and reconnects with
// backoff. The socket is injected so tests can drive it without a network.

import { ClientMessage, ServerMessage, isServerMessage } from './protocol.js';

export interface ChannelSocket {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: string }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
}

export type SocketFactory = () => ChannelSocket;

export interface ClientEvents {
  onMessage: (message: ServerMessage) => void;
  onStatus?: (connected: boolean) => void;
}

export class SessionChannel {
  private socket: ChannelSocket | null = null;
  private outbox: ClientMessage[] = [];
  private lastSeq = 0;
  private pending = new Map<number, ServerMessage>();
  private connected = false;
  private closed = false;
  private reconnectDelay = 250;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly factory: SocketFactory,
    private readonly events: ClientEvents,
  ) {}

  connect(): void {
    if (this.closed) return;
    const socket = this.factory();
    this.socket = socket;
    socket.onopen = () => {
      this.connected = true;
      this.reconnectDelay = 250;
      this.events.onStatus?.(true);
      // flush everything queued while offline, in order
      const queued = this.outbox;
      this.outbox = [];
      for (const message of queued) socket.send(JSON.stringify(message));
    };
    socket.onmessage = (event) => {
      let parsed: unknown;
      try {
        parsed = JSON.parse(event.data);
      } catch {
        return;
      }
      if (!isServerMessage(parsed)) return;
      this.accept(parsed);
    };
    socket.onclose = () => {
      this.connected = false;
      this.socket = null;
      this.events.onStatus?.(false);
      if (!this.closed) this.scheduleReconnect();
    };
  }

  // Deliver exactly once, in order: duplicates (seq <= lastSeq) are dropped,
  // early arrivals wait in a buffer until the gap closes.
  private accept(message: ServerMessage): void {
    if (message.seq <= this.lastSeq) return;
    this.pending.set(message.seq, message);
    while (this.pending.has(this.lastSeq + 1)) {
      const next = this.pending.get(this.lastSeq + 1)!;
      this.pending.delete(this.lastSeq + 1);
      this.lastSeq += 1;
      this.events.onMessage(next);
    }
  }

  private scheduleReconnect(): void {
    if (this.timer !== null) return;
    this.timer = setTimeout(() => {
      this.timer = null;
      this.connect();
    }, this.reconnectDelay);
    this.reconnectDelay = Math.min(this.reconnectDelay * 2, 5000);
  }

  send(message: ClientMessage): void {
    if (this.connected && this.socket) {
      this.socket.send(JSON.stringify(message));
    } else {
      this.outbox.push(message);
    }
  }

  get isConnected(): boolean {
    return this.connected;
  }

  get deliveredSeq(): number {
    return this.lastSeq;
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.socket?.close();
  }
}
