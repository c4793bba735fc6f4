// Scene geometry: workspace-to-canvas mapping and click hit-testing.
// Pure functions so the interaction logic is testable without a DOM.

import { SceneObject, SceneSnapshot } from './protocol.js';

export interface Viewport {
  width: number;
  height: number;
}

export function toCanvas(
  scene: SceneSnapshot,
  viewport: Viewport,
  x: number,
  y: number,
): [number, number] {
  const [w, d] = scene.workspace;
  return [(x / w) * viewport.width, (1 - y / d) * viewport.height];
}

export function fromCanvas(
  scene: SceneSnapshot,
  viewport: Viewport,
  px: number,
  py: number,
): [number, number] {
  const [w, d] = scene.workspace;
  return [(px / viewport.width) * w, (1 - py / viewport.height) * d];
}

export function objectFootprint(obj: SceneObject): {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
} {
  return {
    x0: obj.pose[0] - obj.bbox[0] / 2,
    y0: obj.pose[1] - obj.bbox[1] / 2,
    x1: obj.pose[0] + obj.bbox[0] / 2,
    y1: obj.pose[1] + obj.bbox[1] / 2,
  };
}

// Topmost object whose footprint contains the workspace point; held objects
// hover above everything, small objects win ties so stacks stay clickable.
export function hitTest(scene: SceneSnapshot, x: number, y: number): string | null {
  let best: SceneObject | null = null;
  for (const obj of scene.objects) {
    const f = objectFootprint(obj);
    if (x < f.x0 || x > f.x1 || y < f.y0 || y > f.y1) continue;
    if (best === null || prefer(obj, best)) best = obj;
  }
  return best ? best.id : null;
}

function prefer(a: SceneObject, b: SceneObject): boolean {
  if (a.held !== b.held) return a.held;
  if (a.pose[2] !== b.pose[2]) return a.pose[2] > b.pose[2];
  return a.bbox[0] * a.bbox[1] < b.bbox[0] * b.bbox[1];
}

export function cssColor(rgb: [number, number, number]): string {
  const [r, g, b] = rgb.map((v) => Math.round(v * 255));
  return `rgb(${r}, ${g}, ${b})`;
}
