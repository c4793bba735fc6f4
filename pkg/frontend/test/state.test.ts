// View-state folding and the click-to-utterance binding.

import { describe, expect, it } from 'vitest';
import { ServerMessage } from '../src/protocol.js';
import { ViewState } from '../src/state.js';

function message(seq: number, type: ServerMessage['type'], payload: Record<string, unknown>) {
  return { v: 1, type, seq, payload } as ServerMessage;
}

describe('ViewState', () => {
  it('keeps chat in server order with segment badges', () => {
    const state = new ViewState();
    state.apply(message(1, 'agent_utterance', { text: 'Hello.', template: 'ok', segment: 'A1' }));
    state.apply(message(2, 'agent_utterance', { text: 'Next?', template: 'ask_next_action' }));
    expect(state.chat.map((l) => l.text)).toEqual(['Hello.', 'Next?']);
    expect(state.chat[0].segment).toBe('A1');
    expect(state.chat[1].awaitingReply).toBe(true);
  });

  it('binds a prior selection to a gestural utterance and clears it', () => {
    const state = new ViewState();
    state.select('o3');
    const bound = state.composeUtterance('This is orange.');
    expect(bound.payload.click).toBe('o3');
    expect(state.selected).toBeNull();
    const plain = state.composeUtterance('What next');
    expect(plain.payload.click).toBeUndefined();
  });

  it('keeps the selection for non-gestural utterances', () => {
    const state = new ViewState();
    state.select('o2');
    state.composeUtterance('Store the orange object.');
    expect(state.selected).toBe('o2');
  });

  it('a later selection replaces an earlier one', () => {
    const state = new ViewState();
    state.select('o1');
    state.select('o2');
    const bound = state.composeUtterance('Pick up this.');
    expect(bound.payload.click).toBe('o2');
  });

  it('summarizes learning events for the feed', () => {
    const state = new ViewState();
    state.apply(
      message(1, 'learning_event', {
        payload: { learning_kind: 'word-map', word: 'orange', symbol: 'c1', property: 'color' },
      }),
    );
    expect(state.learning[0].kind).toBe('word-map');
    expect(state.learning[0].detail).toContain('orange');
  });

  it('errors surface in the chat', () => {
    const state = new ViewState();
    state.apply(message(1, 'error', { reason: "no object 'ghost'" }));
    expect(state.chat[0].text).toContain('ghost');
  });
});
