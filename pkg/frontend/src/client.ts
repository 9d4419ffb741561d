/**
 * Session state machine for the simulator stream.
 *
 * Holds the latest frame, the camera, at most one pending action request
 * and the replay buffer of every frame received. The only messages it will
 * ever put on the wire are hello, action and camera; everything sent is
 * logged in `sentTypes` so tests can audit the protocol surface.
 */

import {
  ActionRequestMessage,
  ClientMessage,
  FrameMessage,
  MessageDecoder,
  PROTOCOL_VERSION,
  encodeMessage,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "incompatible" | "disconnected";

export interface Camera {
  cx: number;
  cy: number;
  scale: number; // pixels per world meter
}

/** Minimal duplex byte transport; implemented over TCP (node) or WebSocket. */
export interface Transport {
  send(data: Uint8Array): void;
  close(): void;
  onData(handler: (chunk: Uint8Array) => void): void;
  onClose(handler: () => void): void;
}

export class SimClient {
  status: ConnectionStatus = "connecting";
  latestFrame: FrameMessage | null = null;
  pendingRequest: ActionRequestMessage | null = null;
  camera: Camera = { cx: 0, cy: 0, scale: 1 };
  replayBuffer: FrameMessage[] = [];
  sentTypes: string[] = [];

  onFrame: ((frame: FrameMessage) => void) | null = null;
  onActionRequest: ((request: ActionRequestMessage | null) => void) | null = null;
  onStatus: ((status: ConnectionStatus) => void) | null = null;

  private decoder = new MessageDecoder();

  constructor(private transport: Transport) {
    transport.onData((chunk) => {
      for (const message of this.decoder.push(chunk)) {
        this.handleMessage(message as Record<string, unknown>);
      }
    });
    transport.onClose(() => this.setStatus("disconnected"));
  }

  private setStatus(status: ConnectionStatus): void {
    if (this.status === status) return;
    // a version mismatch is final; the close it triggers must not mask it
    if (this.status === "incompatible") return;
    this.status = status;
    this.onStatus?.(status);
  }

  private handleMessage(message: Record<string, unknown>): void {
    switch (message.type) {
      case "hello": {
        if (message.protocol_version !== PROTOCOL_VERSION) {
          this.setStatus("incompatible");
          this.transport.close();
          return;
        }
        this.send({ type: "hello", protocol_version: PROTOCOL_VERSION });
        this.setStatus("connected");
        return;
      }
      case "frame": {
        const frame = message as unknown as FrameMessage;
        this.latestFrame = frame;
        this.replayBuffer.push(frame);
        this.onFrame?.(frame);
        return;
      }
      case "action_request": {
        // a newer request supersedes any unanswered one
        this.pendingRequest = message as unknown as ActionRequestMessage;
        this.onActionRequest?.(this.pendingRequest);
        return;
      }
      default:
        console.warn("ignoring unknown message type", message.type);
    }
  }

  /**
   * Answer the pending request with a clicked node. Returns false (and
   * sends nothing) when there is no pending request or the node is not a
   * legal target; answering clears the pending state.
   */
  answerActionRequest(nodeId: number): boolean {
    const request = this.pendingRequest;
    if (request === null) return false;
    if (!request.targets.some((t) => t.id === nodeId)) return false;
    this.send({ type: "action", agent: request.agent, target: nodeId });
    this.pendingRequest = null;
    this.onActionRequest?.(null);
    return true;
  }

  /** Register a server-side culling viewport (optional; camera stays local). */
  sendCamera(cx: number, cy: number, hw: number, hh: number): void {
    this.send({ type: "camera", cx, cy, hw, hh });
  }

  close(): void {
    this.transport.close();
  }

  private send(message: ClientMessage): void {
    this.sentTypes.push(message.type);
    this.transport.send(encodeMessage(message));
  }
}

/** Reconnect backoff: 0.5 s doubling per attempt, capped at 10 s. */
export function backoffDelayMs(attempt: number): number {
  return Math.min(500 * 2 ** Math.max(attempt, 0), 10_000);
}

/** Scrubbing controls over a buffer of received frames (live or replayed). */
export class ReplayScrubber {
  index = 0;
  playing = false;
  rate = 1; // frames advanced per tick

  constructor(private buffer: FrameMessage[]) {}

  get length(): number {
    return this.buffer.length;
  }

  current(): FrameMessage | null {
    return this.buffer[this.index] ?? null;
  }

  /** Jump to the frame for a turn number; out-of-range turns clamp. */
  scrub(turn: number): FrameMessage | null {
    if (this.buffer.length === 0) return null;
    let index = this.buffer.findIndex((f) => f.turn >= turn);
    if (index === -1) index = this.buffer.length - 1;
    this.index = index;
    return this.current();
  }

  /** Advance `rate` frames while playing; pauses at the end. */
  tick(): FrameMessage | null {
    if (this.playing) {
      this.index = Math.min(this.index + this.rate, this.buffer.length - 1);
      if (this.index === this.buffer.length - 1) this.playing = false;
    }
    return this.current();
  }
}
