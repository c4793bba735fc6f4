// Geometry: canvas mapping round-trips and click hit-testing.

import { describe, expect, it } from 'vitest';
import { SceneSnapshot } from '../src/protocol.js';
import { cssColor, fromCanvas, hitTest, toCanvas } from '../src/scene.js';

function scene(objects: Partial<SceneSnapshot['objects'][number]>[]): SceneSnapshot {
  return {
    objects: objects.map((o, i) => ({
      id: o.id ?? `o${i + 1}`,
      pose: o.pose ?? [0.5, 0.5, 0.015],
      bbox: o.bbox ?? [0.06, 0.06, 0.03],
      color: o.color ?? [0.9, 0.1, 0.1],
      shape: o.shape ?? 'square',
      held: o.held ?? false,
    })),
    locations: { pantry: [0.75, 0.75, 0.97, 0.97] },
    arm: null,
    tick: 0,
    workspace: [1, 1, 0.5],
    pointed_at: null,
  };
}

const viewport = { width: 500, height: 500 };

describe('canvas mapping', () => {
  it('round-trips workspace coordinates', () => {
    const s = scene([]);
    const [px, py] = toCanvas(s, viewport, 0.3, 0.7);
    const [x, y] = fromCanvas(s, viewport, px, py);
    expect(x).toBeCloseTo(0.3);
    expect(y).toBeCloseTo(0.7);
  });

  it('workspace y grows upward on screen', () => {
    const s = scene([]);
    const [, low] = toCanvas(s, viewport, 0.5, 0.1);
    const [, high] = toCanvas(s, viewport, 0.5, 0.9);
    expect(high).toBeLessThan(low);
  });
});

describe('hit testing', () => {
  it('hits the object under the point', () => {
    const s = scene([{ id: 'a', pose: [0.2, 0.2, 0.015] }, { id: 'b', pose: [0.7, 0.7, 0.015] }]);
    expect(hitTest(s, 0.21, 0.19)).toBe('a');
    expect(hitTest(s, 0.7, 0.7)).toBe('b');
    expect(hitTest(s, 0.5, 0.5)).toBeNull();
  });

  it('prefers the upper object of a stack', () => {
    const s = scene([
      { id: 'bottom', pose: [0.5, 0.5, 0.02], bbox: [0.1, 0.1, 0.04] },
      { id: 'top', pose: [0.5, 0.5, 0.055], bbox: [0.05, 0.05, 0.03] },
    ]);
    expect(hitTest(s, 0.5, 0.5)).toBe('top');
  });

  it('prefers a held object hovering over another', () => {
    const s = scene([
      { id: 'resting', pose: [0.5, 0.5, 0.015] },
      { id: 'held', pose: [0.5, 0.5, 0.4], held: true },
    ]);
    expect(hitTest(s, 0.5, 0.5)).toBe('held');
  });

  it('renders colors as css', () => {
    expect(cssColor([1, 0.5, 0])).toBe('rgb(255, 128, 0)');
  });
});
