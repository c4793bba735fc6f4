// Message and snapshot types for the session service (docs/protocol.md, v1).

export const PROTOCOL_VERSION = 1;

export type ServerMessageType =
  | 'agent_utterance'
  | 'agent_action'
  | 'scene_update'
  | 'learning_event'
  | 'error';

export interface ServerMessage {
  v: number;
  type: ServerMessageType;
  seq: number;
  payload: Record<string, unknown>;
}

export interface ClientMessage {
  v: number;
  type: 'utterance' | 'click';
  seq: number;
  payload: Record<string, unknown>;
}

export interface SceneObject {
  id: string;
  pose: [number, number, number];
  bbox: [number, number, number];
  color: [number, number, number];
  shape: string;
  held: boolean;
}

export interface SceneSnapshot {
  objects: SceneObject[];
  locations: Record<string, [number, number, number, number]>;
  arm: string | null;
  tick: number;
  workspace: [number, number, number];
  pointed_at: string | null;
}

export interface StackSnapshot {
  open: string[];
  segments: Record<
    string,
    { purpose: string; status: string; originator: string; parent: string | null }
  >;
}

export interface WordMapEntry {
  entry: { word: string; symbol: string; property: string };
}

export interface PrepMapEntry {
  entry: {
    word: string;
    composition: {
      allowed: Record<'x' | 'y' | 'z', string[]>;
      dist: Record<'x' | 'y' | 'z', { n: number; min: number; max: number; mean: number }>;
      example_count: number;
      ever_all_aligned: boolean;
    };
  };
}

export interface SemanticSnapshot {
  word_maps: WordMapEntry[];
  prep_maps: PrepMapEntry[];
  networks: Array<{
    entry: Record<string, unknown>;
    nodes?: Record<string, string>;
  } & Record<string, unknown>>;
  rules: Array<{ rule_id: string; for_operator: string; conditions: string[][]; action: string[] }>;
  classifier_examples: Record<string, number>;
}

export function utteranceMessage(text: string, click?: string | null): ClientMessage {
  const payload: Record<string, unknown> = { text };
  if (click) payload.click = click;
  return { v: PROTOCOL_VERSION, type: 'utterance', seq: 0, payload };
}

export function clickMessage(objectId: string): ClientMessage {
  return { v: PROTOCOL_VERSION, type: 'click', seq: 0, payload: { object_id: objectId } };
}

export function isServerMessage(data: unknown): data is ServerMessage {
  if (typeof data !== 'object' || data === null) return false;
  const m = data as Record<string, unknown>;
  return (
    m.v === PROTOCOL_VERSION &&
    typeof m.seq === 'number' &&
    typeof m.type === 'string' &&
    typeof m.payload === 'object'
  );
}
