/**
 * Wire protocol shared with the simulator: length-prefixed UTF-8 JSON
 * messages over a duplex byte stream. The prefix is a 4-byte big-endian
 * payload length. Server sends hello/frame/action_request; the client is
 * only ever allowed to send hello/action/camera.
 */

export const PROTOCOL_VERSION = 1;

export type Color = [number, number, number];

export interface CircleCommand {
  kind: "circle";
  x: number;
  y: number;
  radius: number;
  color: Color;
}

export interface RectangleCommand {
  kind: "rectangle";
  x: number; // center
  y: number;
  width: number;
  height: number;
  color: Color;
}

export interface LineCommand {
  kind: "line";
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  width: number;
  color: Color;
}

export interface TextCommand {
  kind: "text";
  x: number;
  y: number;
  content: string;
  size: number;
  color: Color;
}

export type RenderCommand = CircleCommand | RectangleCommand | LineCommand | TextCommand;

export interface HelloMessage {
  type: "hello";
  protocol_version: number;
}

export interface FrameMessage {
  type: "frame";
  turn: number;
  commands: RenderCommand[];
}

export interface ActionTarget {
  id: number;
  x: number;
  y: number;
}

export interface ActionRequestMessage {
  type: "action_request";
  agent: string;
  targets: ActionTarget[];
}

export interface ActionMessage {
  type: "action";
  agent: string;
  target: number;
}

export interface CameraMessage {
  type: "camera";
  cx: number;
  cy: number;
  hw: number;
  hh: number;
}

export type ServerMessage = HelloMessage | FrameMessage | ActionRequestMessage;
export type ClientMessage = HelloMessage | ActionMessage | CameraMessage;

const encoder = new TextEncoder();
const decoderUtf8 = new TextDecoder();

export function encodeMessage(message: ClientMessage | ServerMessage): Uint8Array {
  const payload = encoder.encode(JSON.stringify(message));
  const framed = new Uint8Array(4 + payload.length);
  new DataView(framed.buffer).setUint32(0, payload.length, false);
  framed.set(payload, 4);
  return framed;
}

/** Incremental decoder: feed arbitrary chunks, get complete messages out. */
export class MessageDecoder {
  private buffer = new Uint8Array(0);

  push(chunk: Uint8Array): unknown[] {
    const merged = new Uint8Array(this.buffer.length + chunk.length);
    merged.set(this.buffer, 0);
    merged.set(chunk, this.buffer.length);
    this.buffer = merged;

    const messages: unknown[] = [];
    for (;;) {
      if (this.buffer.length < 4) break;
      const length = new DataView(
        this.buffer.buffer,
        this.buffer.byteOffset,
        this.buffer.byteLength,
      ).getUint32(0, false);
      if (this.buffer.length < 4 + length) break;
      const payload = this.buffer.subarray(4, 4 + length);
      messages.push(JSON.parse(decoderUtf8.decode(payload)));
      this.buffer = this.buffer.slice(4 + length);
    }
    return messages;
  }
}
