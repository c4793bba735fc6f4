// Inspector panels: the segment stack, semantic memory (word maps, per-axis
// preposition chips, operator networks, rules), and learning-event feed.
// Read-only renders of snapshot documents; refreshed on learning events.

import {
  SemanticSnapshot,
  StackSnapshot,
} from './protocol.js';
import { LearningToast } from './state.js';

const REL_CHIP: Record<string, string> = {
  aligned: '=',
  'greater-than': '>',
  'less-than': '<',
};

export function renderStack(el: HTMLElement, snapshot: StackSnapshot | null): void {
  if (!snapshot) {
    el.innerHTML = '<p class="empty">no snapshot</p>';
    return;
  }
  const open = new Set(snapshot.open);
  const rows = Object.entries(snapshot.segments)
    .map(([id, seg]) => {
      const focus = snapshot.open[snapshot.open.length - 1] === id ? ' focus' : '';
      const state = open.has(id) ? 'open' : seg.status;
      return `<tr class="${state}${focus}"><td>${id}</td><td>${seg.purpose}</td>` +
        `<td>${seg.originator}</td><td>${state}</td></tr>`;
    })
    .join('');
  el.innerHTML = snapshot.open.length || rows
    ? `<p>stack: ${snapshot.open.join(' &rsaquo; ') || '(idle)'}</p>
       <table><tr><th>id</th><th>purpose</th><th>by</th><th>state</th></tr>${rows}</table>`
    : '<p class="empty">no segments yet</p>';
}

export function renderSemantic(el: HTMLElement, snapshot: SemanticSnapshot | null): void {
  if (!snapshot) {
    el.innerHTML = '<p class="empty">no snapshot</p>';
    return;
  }
  const words = snapshot.word_maps
    .map((w) => `<span class="chip">${w.entry.word} → ${w.entry.symbol}</span>`)
    .join(' ');
  const preps = snapshot.prep_maps
    .map((p) => {
      const comp = p.entry.composition;
      const axes = (['x', 'y', 'z'] as const)
        .map((axis) => {
          const rels = comp.allowed[axis].map((r) => REL_CHIP[r] ?? r).join(',');
          return `<span class="axis">${axis}:{${rels}}</span>`;
        })
        .join(' ');
      return `<div class="prep"><b>${p.entry.word}</b> ${axes} ` +
        `<small>${comp.example_count} example(s)</small></div>`;
    })
    .join('');
  const networks = snapshot.networks
    .map((n) => {
      const entry = n.entry as Record<string, unknown>;
      const nodes = n.nodes
        ? Object.entries(n.nodes).map(([k, v]) => `${k}=${v}`).join(' · ')
        : '';
      return `<div class="network"><b>${entry.verb}</b> → ${entry.operator_id}` +
        `<br><small>${nodes}</small></div>`;
    })
    .join('');
  const rules = snapshot.rules
    .map((r) => {
      const conditions = r.conditions.map((c) => c.join(' ')).join(' ∧ ');
      return `<div class="rule">${r.rule_id} [${r.for_operator}]: ` +
        `${conditions} → ${r.action.join(' ')}</div>`;
    })
    .join('');
  el.innerHTML =
    (words ? `<h4>word maps</h4><div>${words}</div>` : '') +
    (preps ? `<h4>prepositions</h4>${preps}` : '') +
    (networks ? `<h4>action concepts</h4>${networks}` : '') +
    (rules ? `<h4>rules</h4>${rules}` : '') ||
    '<p class="empty">nothing learned yet</p>';
}

export function renderLearningFeed(el: HTMLElement, toasts: LearningToast[]): void {
  el.innerHTML = toasts.length
    ? toasts
        .slice(-12)
        .map((t) => `<div class="toast ${t.kind}">✦ ${t.kind}: ${t.detail}</div>`)
        .join('')
    : '<p class="empty">no learning events</p>';
}
