/** Node-side TCP transport (tests, tooling, and the WebSocket bridge). */

import net from "node:net";

import { Transport } from "./client.js";

export class TcpTransport implements Transport {
  private dataHandler: ((chunk: Uint8Array) => void) | null = null;
  private closeHandler: (() => void) | null = null;

  private constructor(private socket: net.Socket) {
    socket.on("data", (chunk: Buffer) => this.dataHandler?.(new Uint8Array(chunk)));
    socket.on("close", () => this.closeHandler?.());
    socket.on("error", () => socket.destroy());
  }

  static connect(host: string, port: number, timeoutMs = 5000): Promise<TcpTransport> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port });
      const timer = setTimeout(() => {
        socket.destroy();
        reject(new Error(`connect timeout to ${host}:${port}`));
      }, timeoutMs);
      socket.once("connect", () => {
        clearTimeout(timer);
        resolve(new TcpTransport(socket));
      });
      socket.once("error", (err) => {
        clearTimeout(timer);
        reject(err);
      });
    });
  }

  send(data: Uint8Array): void {
    this.socket.write(data);
  }

  close(): void {
    this.socket.destroy();
  }

  onData(handler: (chunk: Uint8Array) => void): void {
    this.dataHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }
}
