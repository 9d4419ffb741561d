/**
 * Immediate-mode canvas rendering of frames.
 *
 * Frames arrive pre-culled and pre-ordered from the server, so rendering
 * is a pure pass over the command list: clear, transform each command from
 * world meters to screen pixels through the camera, draw. Re-rendering the
 * same (frame, camera) pair produces identical output.
 */

import { Camera } from "./client.js";
import { ActionTarget, Color, FrameMessage, RenderCommand } from "./protocol.js";

/** The 2D-context surface actually used; structural so tests can fake it. */
export interface Surface {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
}

export function cssColor([r, g, b]: Color): string {
  return `rgb(${r},${g},${b})`;
}

export function worldToScreen(
  camera: Camera,
  width: number,
  height: number,
  x: number,
  y: number,
): [number, number] {
  return [(x - camera.cx) * camera.scale + width / 2, (y - camera.cy) * camera.scale + height / 2];
}

export function screenToWorld(
  camera: Camera,
  width: number,
  height: number,
  sx: number,
  sy: number,
): [number, number] {
  return [(sx - width / 2) / camera.scale + camera.cx, (sy - height / 2) / camera.scale + camera.cy];
}

const warnedKinds = new Set<string>();

function drawCommand(
  surface: Surface,
  width: number,
  height: number,
  camera: Camera,
  command: RenderCommand,
): void {
  switch (command.kind) {
    case "line": {
      const [x1, y1] = worldToScreen(camera, width, height, command.x1, command.y1);
      const [x2, y2] = worldToScreen(camera, width, height, command.x2, command.y2);
      surface.strokeStyle = cssColor(command.color);
      surface.lineWidth = Math.max(command.width * camera.scale, 0.5);
      surface.beginPath();
      surface.moveTo(x1, y1);
      surface.lineTo(x2, y2);
      surface.stroke();
      return;
    }
    case "circle": {
      const [x, y] = worldToScreen(camera, width, height, command.x, command.y);
      surface.fillStyle = cssColor(command.color);
      surface.beginPath();
      surface.arc(x, y, command.radius * camera.scale, 0, 2 * Math.PI);
      surface.fill();
      return;
    }
    case "rectangle": {
      const [x, y] = worldToScreen(camera, width, height, command.x, command.y);
      const w = command.width * camera.scale;
      const h = command.height * camera.scale;
      surface.fillStyle = cssColor(command.color);
      surface.fillRect(x - w / 2, y - h / 2, w, h);
      return;
    }
    case "text": {
      const [x, y] = worldToScreen(camera, width, height, command.x, command.y);
      surface.fillStyle = cssColor(command.color);
      surface.font = `${Math.max(command.size * camera.scale, 1)}px sans-serif`;
      surface.fillText(command.content, x, y);
      return;
    }
    default: {
      // forward compatibility: unknown command tags are skipped, once per kind
      const kind = (command as { kind?: string }).kind ?? "?";
      if (!warnedKinds.has(kind)) {
        warnedKinds.add(kind);
        console.warn("skipping unknown render command kind", kind);
      }
    }
  }
}

export function renderFrame(
  surface: Surface,
  width: number,
  height: number,
  frame: FrameMessage,
  camera: Camera,
): void {
  surface.clearRect(0, 0, width, height);
  for (const command of frame.commands) {
    drawCommand(surface, width, height, camera, command);
  }
}

/** Highlight the legal targets of a pending action request. */
export function renderTargets(
  surface: Surface,
  width: number,
  height: number,
  targets: ActionTarget[],
  camera: Camera,
): void {
  surface.strokeStyle = "rgb(255,255,255)";
  surface.lineWidth = 2;
  for (const target of targets) {
    const [x, y] = worldToScreen(camera, width, height, target.x, target.y);
    surface.beginPath();
    surface.arc(x, y, targetHitRadiusPx, 0, 2 * Math.PI);
    surface.stroke();
  }
}

export const targetHitRadiusPx = 12;

/** Map a click to the closest highlighted target within the hit radius. */
export function hitTestTarget(
  targets: ActionTarget[],
  camera: Camera,
  width: number,
  height: number,
  clickX: number,
  clickY: number,
): number | null {
  let bestId: number | null = null;
  let bestDist = targetHitRadiusPx;
  for (const target of targets) {
    const [x, y] = worldToScreen(camera, width, height, target.x, target.y);
    const dist = Math.hypot(clickX - x, clickY - y);
    if (dist <= bestDist) {
      bestDist = dist;
      bestId = target.id;
    }
  }
  return bestId;
}
