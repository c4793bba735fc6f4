// Canvas rendering of the top-down scene: color/size/shape glyphs, labeled
// regions, the held object at the gripper, and the current selection ring.

import { SceneSnapshot } from './protocol.js';
import { Viewport, cssColor, toCanvas } from './scene.js';

export function renderScene(
  ctx: CanvasRenderingContext2D,
  scene: SceneSnapshot | null,
  viewport: Viewport,
  selected: string | null,
  connected: boolean,
): void {
  ctx.clearRect(0, 0, viewport.width, viewport.height);
  ctx.fillStyle = '#f5f1e8';
  ctx.fillRect(0, 0, viewport.width, viewport.height);
  if (!scene) return;

  const [w, d] = scene.workspace;
  const sx = viewport.width / w;
  const sy = viewport.height / d;

  for (const [name, region] of Object.entries(scene.locations)) {
    const [x0, y0, x1, y1] = region;
    const [cx, cy] = toCanvas(scene, viewport, x0, y1);
    ctx.fillStyle = 'rgba(110, 140, 170, 0.15)';
    ctx.strokeStyle = 'rgba(110, 140, 170, 0.7)';
    ctx.lineWidth = 1.5;
    ctx.fillRect(cx, cy, (x1 - x0) * sx, (y1 - y0) * sy);
    ctx.strokeRect(cx, cy, (x1 - x0) * sx, (y1 - y0) * sy);
    ctx.fillStyle = '#4a6076';
    ctx.font = '12px system-ui, sans-serif';
    ctx.fillText(name, cx + 4, cy + 14);
  }

  for (const obj of scene.objects) {
    const [cx, cy] = toCanvas(scene, viewport, obj.pose[0], obj.pose[1]);
    const halfW = (obj.bbox[0] / 2) * sx;
    const halfD = (obj.bbox[1] / 2) * sy;
    ctx.fillStyle = cssColor(obj.color);
    ctx.strokeStyle = obj.held ? '#222' : 'rgba(0,0,0,0.4)';
    ctx.lineWidth = obj.held ? 2.5 : 1;
    ctx.setLineDash(obj.held ? [4, 3] : []);
    drawGlyph(ctx, obj.shape, cx, cy, halfW, halfD);
    ctx.setLineDash([]);
    if (obj.id === selected) {
      ctx.strokeStyle = '#d97706';
      ctx.lineWidth = 2.5;
      ctx.beginPath();
      ctx.arc(cx, cy, Math.max(halfW, halfD) + 6, 0, Math.PI * 2);
      ctx.stroke();
    }
    if (obj.id === scene.pointed_at) {
      ctx.fillStyle = '#222';
      ctx.font = '14px system-ui, sans-serif';
      ctx.fillText('👉', cx + halfW + 2, cy - halfD - 2);
    }
  }

  if (!connected) {
    ctx.fillStyle = 'rgba(30, 30, 30, 0.55)';
    ctx.fillRect(0, 0, viewport.width, viewport.height);
    ctx.fillStyle = '#fff';
    ctx.font = '18px system-ui, sans-serif';
    ctx.textAlign = 'center';
    ctx.fillText('disconnected — reconnecting…', viewport.width / 2, viewport.height / 2);
    ctx.textAlign = 'start';
  }
}

function drawGlyph(
  ctx: CanvasRenderingContext2D,
  shape: string,
  cx: number,
  cy: number,
  halfW: number,
  halfD: number,
): void {
  ctx.beginPath();
  if (shape === 'circle') {
    ctx.ellipse(cx, cy, halfW, halfD, 0, 0, Math.PI * 2);
  } else if (shape === 'triangle') {
    ctx.moveTo(cx, cy - halfD);
    ctx.lineTo(cx + halfW, cy + halfD);
    ctx.lineTo(cx - halfW, cy + halfD);
    ctx.closePath();
  } else {
    ctx.rect(cx - halfW, cy - halfD, halfW * 2, halfD * 2);
  }
  ctx.fill();
  ctx.stroke();
}
