// View state: the single store every panel renders from. Messages fold in
// through apply(); chat ordering follows server seq; a pending click binds
// to the next utterance that uses "this".

import { SceneSnapshot, ServerMessage, utteranceMessage } from './protocol.js';

export interface ChatLine {
  who: 'instructor' | 'agent';
  text: string;
  seq: number;
  segment?: string | null;
  awaitingReply?: boolean;
}

export interface LearningToast {
  kind: string;
  detail: string;
  seq: number;
}

export interface ActionLine {
  action: string;
  detail: string;
  seq: number;
}

const QUESTION_TEMPLATES = new Set([
  'ask_property',
  'ask_which',
  'ask_prep_example',
  'ask_goal',
  'ask_next_action',
]);

export class ViewState {
  scene: SceneSnapshot | null = null;
  chat: ChatLine[] = [];
  actions: ActionLine[] = [];
  learning: LearningToast[] = [];
  selected: string | null = null;
  connected = false;
  renderedSeqs: number[] = [];
  private localSeq = 0;

  apply(message: ServerMessage): void {
    this.renderedSeqs.push(message.seq);
    switch (message.type) {
      case 'agent_utterance': {
        const text = String(message.payload.text ?? '');
        const template = String(message.payload.template ?? '');
        this.chat.push({
          who: 'agent',
          text,
          seq: message.seq,
          segment: (message.payload.segment as string | null) ?? null,
          awaitingReply: QUESTION_TEMPLATES.has(template),
        });
        break;
      }
      case 'agent_action': {
        const kind = String(message.payload.type ?? '');
        const detail =
          kind === 'put-down'
            ? `(${Number(message.payload.x).toFixed(2)}, ${Number(message.payload.y).toFixed(2)})`
            : String(message.payload.target ?? '');
        this.actions.push({ action: kind, detail, seq: message.seq });
        break;
      }
      case 'scene_update': {
        this.scene = message.payload as unknown as SceneSnapshot;
        break;
      }
      case 'learning_event': {
        const inner = message.payload.payload as Record<string, unknown> | undefined;
        const kind = String(inner?.learning_kind ?? 'unknown');
        const detail = describeLearning(kind, inner ?? {});
        this.learning.push({ kind, detail, seq: message.seq });
        break;
      }
      case 'error': {
        this.chat.push({
          who: 'agent',
          text: `[error] ${String(message.payload.reason ?? '')}`,
          seq: message.seq,
        });
        break;
      }
    }
  }

  select(objectId: string | null): void {
    this.selected = objectId;
  }

  // Compose the utterance message, attaching the standing selection when the
  // text makes a gestural reference.
  composeUtterance(text: string) {
    this.localSeq += 1;
    const gestural = /\bthis\b|\bthat\b/i.test(text);
    const click = gestural ? this.selected : null;
    const message = utteranceMessage(text, click);
    this.chat.push({ who: 'instructor', text, seq: -this.localSeq });
    if (gestural) this.selected = null;
    return message;
  }

  // Event-level transcript for comparing a live walkthrough against the
  // scripted scenario: utterances, actions, and learning kinds in order.
  transcriptEvents(): Array<{ kind: string; detail: string }> {
    const events: Array<{ kind: string; detail: string; seq: number }> = [];
    for (const line of this.chat) {
      if (line.who === 'agent' && line.seq > 0) {
        events.push({ kind: 'agent_utterance', detail: line.text, seq: line.seq });
      }
    }
    for (const action of this.actions) {
      events.push({ kind: 'agent_action', detail: action.action, seq: action.seq });
    }
    for (const toast of this.learning) {
      events.push({ kind: 'learning', detail: toast.kind, seq: toast.seq });
    }
    events.sort((a, b) => a.seq - b.seq);
    return events.map(({ kind, detail }) => ({ kind, detail }));
  }
}

function describeLearning(kind: string, payload: Record<string, unknown>): string {
  switch (kind) {
    case 'word-map':
      return `${payload.word} -> ${payload.symbol} (${payload.property})`;
    case 'percept-train':
      return `trained ${payload.word} on ${payload.object}`;
    case 'prep-learn':
      return `learned example of "${payload.word}"`;
    case 'goal-learn':
      return `goal for ${payload.verb}`;
    case 'rule-learn':
      return `rules for ${payload.operator}`;
    default:
      return kind;
  }
}
