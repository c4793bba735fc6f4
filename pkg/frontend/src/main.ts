// Wire the session client, view state, canvas, chat, and inspectors into the
// page. All dynamic state arrives over the message stream; snapshots are
// fetched only when a panel opens or a learning event invalidates one.

import { SessionChannel } from './client.js';
import {
  SemanticSnapshot,
  StackSnapshot,
  clickMessage,
} from './protocol.js';
import { renderLearningFeed, renderSemantic, renderStack } from './panels.js';
import { renderScene } from './render.js';
import { fromCanvas, hitTest } from './scene.js';
import { ViewState } from './state.js';

const state = new ViewState();

async function createSession(base: string): Promise<string> {
  const response = await fetch(`${base}/session`, {
    method: 'POST',
    headers: { 'content-type': 'application/json' },
    body: JSON.stringify({ seed: 1 }),
  });
  const body = await response.json();
  return body.session_id as string;
}

async function fetchSnapshot<T>(base: string, sid: string, kind: string): Promise<T> {
  const response = await fetch(`${base}/session/${sid}/snapshot/${kind}`);
  const body = await response.json();
  return body.data as T;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const base = location.origin;
  const sid = await createSession(base);
  el<HTMLSpanElement>('session-label').textContent = sid;

  const canvas = el<HTMLCanvasElement>('scene');
  const ctx = canvas.getContext('2d')!;
  const viewport = { width: canvas.width, height: canvas.height };
  const chatLog = el<HTMLDivElement>('chat-log');
  const input = el<HTMLInputElement>('chat-input');
  const stackPanel = el<HTMLDivElement>('stack-panel');
  const semanticPanel = el<HTMLDivElement>('semantic-panel');
  const learningPanel = el<HTMLDivElement>('learning-panel');
  const statusDot = el<HTMLSpanElement>('status');

  const redraw = () =>
    renderScene(ctx, state.scene, viewport, state.selected, state.connected);

  const refreshPanels = async () => {
    const [stack, semantic] = await Promise.all([
      fetchSnapshot<StackSnapshot>(base, sid, 'stack'),
      fetchSnapshot<SemanticSnapshot>(base, sid, 'semantic'),
    ]);
    renderStack(stackPanel, stack);
    renderSemantic(semanticPanel, semantic);
  };

  const redrawChat = () => {
    chatLog.innerHTML = state.chat
      .map((line) => {
        const badge = line.segment ? `<span class="badge">${line.segment}</span>` : '';
        const waiting = line.awaitingReply ? ' awaiting' : '';
        return `<div class="line ${line.who}${waiting}">${badge}${line.text}</div>`;
      })
      .join('');
    chatLog.scrollTop = chatLog.scrollHeight;
  };

  const wsUrl = `${base.replace(/^http/, 'ws')}/session/${sid}/channel`;
  const channel = new SessionChannel(
    () => new WebSocket(wsUrl) as unknown as import('./client.js').ChannelSocket,
    {
      onMessage: (message) => {
        state.apply(message);
        redraw();
        redrawChat();
        renderLearningFeed(learningPanel, state.learning);
        if (message.type === 'learning_event') void refreshPanels();
      },
      onStatus: (connected) => {
        state.connected = connected;
        statusDot.className = connected ? 'dot on' : 'dot off';
        redraw();
      },
    },
  );
  channel.connect();

  canvas.addEventListener('click', (event) => {
    if (!state.scene) return;
    const rect = canvas.getBoundingClientRect();
    const [x, y] = fromCanvas(
      state.scene,
      viewport,
      event.clientX - rect.left,
      event.clientY - rect.top,
    );
    const hit = hitTest(state.scene, x, y);
    if (hit) {
      state.select(hit);
      channel.send(clickMessage(hit));
      redraw();
    }
  });

  const submit = () => {
    const text = input.value.trim();
    if (!text) return;
    input.value = '';
    channel.send(state.composeUtterance(text));
    redrawChat();
  };
  el<HTMLButtonElement>('chat-send').addEventListener('click', submit);
  input.addEventListener('keydown', (event) => {
    if (event.key === 'Enter') submit();
  });

  // initial snapshot so the table is visible before the first interaction
  state.scene = await fetchSnapshot(base, sid, 'scene');
  redraw();
  await refreshPanels();
}

void boot();
