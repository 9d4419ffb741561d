/**
 * Browser entry point: connects through the WebSocket bridge, renders the
 * live stream on a pannable/zoomable canvas, lets a human answer action
 * requests by clicking highlighted nodes, and scrubs buffered replays.
 */

import { ReplayScrubber, SimClient, Transport, backoffDelayMs } from "./client.js";
import {
  hitTestTarget,
  renderFrame,
  renderTargets,
  screenToWorld,
  Surface,
} from "./render.js";
import { FrameMessage } from "./protocol.js";

class WebSocketTransport implements Transport {
  private dataHandler: ((chunk: Uint8Array) => void) | null = null;
  private closeHandler: (() => void) | null = null;

  constructor(private socket: WebSocket) {
    socket.binaryType = "arraybuffer";
    socket.onmessage = (event) => this.dataHandler?.(new Uint8Array(event.data as ArrayBuffer));
    socket.onclose = () => this.closeHandler?.();
    socket.onerror = () => socket.close();
  }

  send(data: Uint8Array): void {
    this.socket.send(data);
  }

  close(): void {
    this.socket.close();
  }

  onData(handler: (chunk: Uint8Array) => void): void {
    this.dataHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }
}

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

const canvas = element<HTMLCanvasElement>("view");
const banner = element<HTMLDivElement>("banner");
const turnLabel = element<HTMLSpanElement>("turn");
const slider = element<HTMLInputElement>("scrub");
const playButton = element<HTMLButtonElement>("play");
const rateSelect = element<HTMLSelectElement>("rate");
const liveButton = element<HTMLButtonElement>("live");

const surface = canvas.getContext("2d") as unknown as Surface;
const camera = { cx: 0, cy: 0, scale: 2 };
let client: SimClient | null = null;
let scrubber: ReplayScrubber | null = null;
let live = true;
let attempt = 0;
let centered = false;

function wsUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("ws") ?? `ws://${window.location.host}/stream`;
}

function connect(): void {
  banner.textContent = "connecting...";
  banner.className = "pending";
  const socket = new WebSocket(wsUrl());
  const transport = new WebSocketTransport(socket);
  const session = new SimClient(transport);
  client = session;
  scrubber = new ReplayScrubber(session.replayBuffer);
  session.camera = camera;

  session.onStatus = (status) => {
    banner.textContent = status;
    banner.className = status;
    if (status === "connected") {
      attempt = 0;
    } else if (status === "disconnected") {
      const delay = backoffDelayMs(attempt++);
      banner.textContent = `disconnected, retrying in ${(delay / 1000).toFixed(1)} s`;
      setTimeout(connect, delay);
    }
  };
  session.onFrame = (frame) => {
    slider.max = String(session.replayBuffer.length - 1);
    if (live) {
      scrubber!.index = session.replayBuffer.length - 1;
      if (!centered) centerOn(frame);
      draw();
    }
  };
  session.onActionRequest = () => draw();
}

function centerOn(frame: FrameMessage): void {
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const command of frame.commands) {
    const xs = "x" in command ? [command.x] : [command.x1, command.x2];
    const ys = "y" in command ? [command.y] : [command.y1, command.y2];
    for (const x of xs) { minX = Math.min(minX, x); maxX = Math.max(maxX, x); }
    for (const y of ys) { minY = Math.min(minY, y); maxY = Math.max(maxY, y); }
  }
  if (minX === Infinity) return;
  camera.cx = (minX + maxX) / 2;
  camera.cy = (minY + maxY) / 2;
  const span = Math.max(maxX - minX, maxY - minY, 1);
  camera.scale = Math.min(canvas.width, canvas.height) / (span * 1.15);
  centered = true;
}

function draw(): void {
  const frame = live ? client?.latestFrame : scrubber?.current();
  if (!frame) return;
  renderFrame(surface, canvas.width, canvas.height, frame, camera);
  const pending = client?.pendingRequest;
  if (pending && live) {
    renderTargets(surface, canvas.width, canvas.height, pending.targets, camera);
  }
  turnLabel.textContent = `turn ${frame.turn}`;
  slider.value = String(scrubber?.index ?? 0);
}

// --- input: pan, zoom, click-to-answer ---------------------------------------

let dragging = false;
let dragFrom = { x: 0, y: 0 };
let dragMoved = 0;

canvas.addEventListener("mousedown", (event) => {
  dragging = true;
  dragMoved = 0;
  dragFrom = { x: event.offsetX, y: event.offsetY };
});

canvas.addEventListener("mousemove", (event) => {
  if (!dragging) return;
  const dx = event.offsetX - dragFrom.x;
  const dy = event.offsetY - dragFrom.y;
  dragMoved += Math.abs(dx) + Math.abs(dy);
  camera.cx -= dx / camera.scale;
  camera.cy -= dy / camera.scale;
  dragFrom = { x: event.offsetX, y: event.offsetY };
  draw();
});

window.addEventListener("mouseup", (event) => {
  if (!dragging) return;
  dragging = false;
  if (dragMoved > 4 || !client) return; // a drag, not a click
  const pending = client.pendingRequest;
  if (!pending) return;
  const target = hitTestTarget(
    pending.targets, camera, canvas.width, canvas.height,
    (event as MouseEvent).offsetX, (event as MouseEvent).offsetY,
  );
  if (target !== null) {
    client.answerActionRequest(target);
    draw();
  }
});

canvas.addEventListener("wheel", (event) => {
  event.preventDefault();
  const factor = event.deltaY < 0 ? 1.15 : 1 / 1.15;
  const [wx, wy] = screenToWorld(camera, canvas.width, canvas.height, event.offsetX, event.offsetY);
  camera.scale *= factor;
  // keep the point under the cursor fixed while zooming
  camera.cx = wx - (event.offsetX - canvas.width / 2) / camera.scale;
  camera.cy = wy - (event.offsetY - canvas.height / 2) / camera.scale;
  draw();
});

// --- replay controls -------------------------------------------------------------

slider.addEventListener("input", () => {
  live = false;
  scrubber?.scrub(Number(slider.value) + (client?.replayBuffer[0]?.turn ?? 0));
  draw();
});

playButton.addEventListener("click", () => {
  if (!scrubber) return;
  live = false;
  scrubber.playing = !scrubber.playing;
  playButton.textContent = scrubber.playing ? "pause" : "play";
});

rateSelect.addEventListener("change", () => {
  if (scrubber) scrubber.rate = Number(rateSelect.value);
});

liveButton.addEventListener("click", () => {
  live = true;
  if (scrubber) scrubber.playing = false;
  draw();
});

setInterval(() => {
  if (scrubber?.playing) {
    scrubber.tick();
    draw();
  }
}, 100);

function resize(): void {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  draw();
}

window.addEventListener("resize", resize);
resize();
connect();
