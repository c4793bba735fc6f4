// Delivery invariant: every server seq rendered exactly once, in order,
// across disconnects, duplicates, and out-of-order arrival.

import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';
import { ChannelSocket, SessionChannel } from '../src/client.js';
import { ServerMessage, utteranceMessage } from '../src/protocol.js';

class FakeSocket implements ChannelSocket {
  sent: string[] = [];
  onmessage: ((event: { data: string }) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  closedByClient = false;

  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.closedByClient = true;
  }
  open(): void {
    this.onopen?.();
  }
  feed(seq: number, type = 'agent_utterance'): void {
    const message: ServerMessage = { v: 1, type: type as never, seq, payload: { text: `m${seq}` } };
    this.onmessage?.({ data: JSON.stringify(message) });
  }
  drop(): void {
    this.onclose?.();
  }
}

describe('SessionChannel delivery', () => {
  let sockets: FakeSocket[];
  let delivered: number[];
  let channel: SessionChannel;

  beforeEach(() => {
    vi.useFakeTimers();
    sockets = [];
    delivered = [];
    channel = new SessionChannel(
      () => {
        const socket = new FakeSocket();
        sockets.push(socket);
        return socket;
      },
      { onMessage: (message) => delivered.push(message.seq) },
    );
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it('delivers in order and drops duplicates', () => {
    channel.connect();
    sockets[0].open();
    sockets[0].feed(1);
    sockets[0].feed(2);
    sockets[0].feed(2);
    sockets[0].feed(3);
    expect(delivered).toEqual([1, 2, 3]);
  });

  it('buffers out-of-order arrivals until the gap closes', () => {
    channel.connect();
    sockets[0].open();
    sockets[0].feed(2);
    expect(delivered).toEqual([]);
    sockets[0].feed(1);
    expect(delivered).toEqual([1, 2]);
  });

  it('holds the exactly-once invariant across a forced reconnect', () => {
    channel.connect();
    sockets[0].open();
    sockets[0].feed(1);
    sockets[0].feed(2);
    sockets[0].feed(3);
    sockets[0].drop();                    // forced disconnect mid-stream
    vi.advanceTimersByTime(300);          // reconnect timer fires
    expect(sockets).toHaveLength(2);
    sockets[1].open();
    for (const seq of [2, 3, 4, 5]) sockets[1].feed(seq);   // overlap replay
    expect(delivered).toEqual([1, 2, 3, 4, 5]);
    expect(new Set(delivered).size).toBe(delivered.length);
  });

  it('queues sends while disconnected and flushes on reconnect in order', () => {
    channel.connect();
    sockets[0].open();
    sockets[0].drop();
    channel.send(utteranceMessage('first'));
    channel.send(utteranceMessage('second'));
    vi.advanceTimersByTime(300);
    sockets[1].open();
    const texts = sockets[1].sent.map((s) => JSON.parse(s).payload.text);
    expect(texts).toEqual(['first', 'second']);
  });

  it('reports connection status transitions', () => {
    const statuses: boolean[] = [];
    const withStatus = new SessionChannel(
      () => {
        const socket = new FakeSocket();
        sockets.push(socket);
        return socket;
      },
      { onMessage: () => undefined, onStatus: (up) => statuses.push(up) },
    );
    withStatus.connect();
    sockets[0].open();
    sockets[0].drop();
    expect(statuses).toEqual([true, false]);
  });

  it('ignores malformed frames', () => {
    channel.connect();
    sockets[0].open();
    sockets[0].onmessage?.({ data: 'not json' });
    sockets[0].onmessage?.({ data: JSON.stringify({ nope: true }) });
    sockets[0].feed(1);
    expect(delivered).toEqual([1]);
  });
});
