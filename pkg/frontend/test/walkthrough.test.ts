// Event-equivalence of a manual teaching walkthrough: the recorded live
// message stream of the canonical dialog, folded through the client and
// view state, must reproduce the scripted scenario's transcript.

import { readFileSync } from 'node:fs';
import { describe, expect, it } from 'vitest';
import { ChannelSocket, SessionChannel } from '../src/client.js';
import { ServerMessage } from '../src/protocol.js';
import { ViewState } from '../src/state.js';

const stream = JSON.parse(
  readFileSync(new URL('./fixtures/store_dialog_stream.json', import.meta.url), 'utf-8'),
) as { turns: Array<{ say: string; click: string | null; messages: ServerMessage[] }> };

const scenario = JSON.parse(
  readFileSync(
    new URL('../../src/groundling/scenarios/store_teaching.json', import.meta.url),
    'utf-8',
  ),
) as {
  steps: Array<{ say: string; expect_agent?: string[]; expect_actions?: string[] }>;
  expect_learning: string[];
};

class ReplaySocket implements ChannelSocket {
  onmessage: ((event: { data: string }) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  send(): void {}
  close(): void {}
}

function runWalkthrough(shuffleWithinTurn = false): ViewState {
  const state = new ViewState();
  const socket = new ReplaySocket();
  const channel = new SessionChannel(() => socket, {
    onMessage: (message) => state.apply(message),
  });
  channel.connect();
  socket.onopen?.();
  for (const turn of stream.turns) {
    state.composeUtterance(turn.say);
    const messages = shuffleWithinTurn ? [...turn.messages].reverse() : turn.messages;
    for (const message of messages) {
      socket.onmessage?.({ data: JSON.stringify(message) });
    }
  }
  return state;
}

describe('manual walkthrough equivalence', () => {
  it('reproduces the scripted agent utterances in order', () => {
    const state = runWalkthrough();
    const spoken = state.chat.filter((l) => l.who === 'agent').map((l) => l.text);
    const expected = scenario.steps.flatMap((s) => s.expect_agent ?? []);
    expect(spoken).toEqual(expected);
  });

  it('reproduces the scripted action sequence', () => {
    const state = runWalkthrough();
    expect(state.actions.map((a) => a.action)).toEqual(['pick-up', 'put-down']);
  });

  it('reproduces the scripted learning events in order', () => {
    const state = runWalkthrough();
    expect(state.learning.map((t) => t.kind)).toEqual(scenario.expect_learning);
  });

  it('transcript ordering is identical even when frames arrive scrambled', () => {
    const ordered = runWalkthrough(false).transcriptEvents();
    const scrambled = runWalkthrough(true).transcriptEvents();
    expect(scrambled).toEqual(ordered);
  });

  it('marks agent questions as awaiting a reply', () => {
    const state = runWalkthrough();
    const question = state.chat.find((l) => l.text.startsWith('Is orange'));
    expect(question?.awaitingReply).toBe(true);
    const done = state.chat.find((l) => l.text === 'Done.');
    expect(done?.awaitingReply).toBe(false);
  });

  it('ends with the scene showing the stored object inside the pantry', () => {
    const state = runWalkthrough();
    const o1 = state.scene?.objects.find((o) => o.id === 'o1');
    const pantry = state.scene?.locations.pantry;
    expect(o1 && pantry).toBeTruthy();
    expect(o1!.pose[0]).toBeGreaterThanOrEqual(pantry![0]);
    expect(o1!.pose[0]).toBeLessThanOrEqual(pantry![2]);
    expect(o1!.pose[1]).toBeGreaterThanOrEqual(pantry![1]);
    expect(o1!.pose[1]).toBeLessThanOrEqual(pantry![3]);
  });

  it('every server seq rendered exactly once and in order', () => {
    const state = runWalkthrough();
    const seqs = state.renderedSeqs;
    expect(seqs).toEqual([...seqs].sort((a, b) => a - b));
    expect(new Set(seqs).size).toBe(seqs.length);
    expect(seqs[seqs.length - 1]).toBe(seqs.length > 0 ? seqs.length : 0);
  });
});
