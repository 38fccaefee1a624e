/**
 * WebSocket client: INIT handshake, a one-slot latest-frame buffer (render
 * never blocks the receive path; stale frames are dropped, never queued),
 * and bounded reconnect.
 */

import { decodeError, decodeFrame, decodeInit, messageType, MSG_ERROR, MSG_FRAME, MSG_INIT } from "./protocol.js";
import type { FrameMessage, InitMessage } from "./protocol.js";

export class FrameSlot {
  private latest: FrameMessage | null = null;
  dropped = 0;
  received = 0;

  offer(frame: FrameMessage): void {
    if (this.latest !== null) this.dropped++;
    this.latest = frame;
    this.received++;
  }

  /** Take the newest frame (or null); the slot empties. */
  take(): FrameMessage | null {
    const f = this.latest;
    this.latest = null;
    return f;
  }
}

type WebSocketLike = {
  binaryType: string;
  onopen: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: ArrayBuffer }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  send(data: ArrayBuffer): void;
  close(): void;
};

export interface ClientEvents {
  onInit?: (init: InitMessage) => void;
  onServerError?: (code: number, message: string) => void;
  onStatus?: (status: string) => void;
  onBadMessage?: (err: unknown) => void;
}

export class StreamClient {
  readonly frames = new FrameSlot();
  init: InitMessage | null = null;
  badFrames = 0;
  private ws: WebSocketLike | null = null;
  private closed = false;
  private reconnectDelayMs = 250;

  constructor(
    private url: string,
    private events: ClientEvents = {},
    private wsFactory: (url: string) => WebSocketLike = (u) =>
      new (globalThis as { WebSocket: new (u: string) => WebSocketLike }).WebSocket(u)
  ) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    this.events.onStatus?.("connecting");
    const ws = this.wsFactory(this.url);
    ws.binaryType = "arraybuffer";
    this.ws = ws;
    ws.onopen = () => {
      this.reconnectDelayMs = 250;
      this.events.onStatus?.("connected");
    };
    ws.onmessage = (ev) => this.handle(ev.data);
    ws.onerror = () => undefined;
    ws.onclose = () => {
      this.ws = null;
      if (this.closed) return;
      this.events.onStatus?.("reconnecting");
      // resume within ~2 s after a drop
      setTimeout(() => !this.closed && this.open(), this.reconnectDelayMs);
      this.reconnectDelayMs = Math.min(this.reconnectDelayMs * 2, 2000);
    };
  }

  handle(data: ArrayBuffer): void {
    try {
      switch (messageType(data)) {
        case MSG_INIT: {
          this.init = decodeInit(data);
          this.events.onInit?.(this.init);
          break;
        }
        case MSG_FRAME: {
          const frame = decodeFrame(data);
          if (this.init && this.compatible(frame)) {
            this.frames.offer(frame);
          } else {
            this.badFrames++;
          }
          break;
        }
        case MSG_ERROR: {
          const err = decodeError(data);
          this.events.onServerError?.(err.code, err.message);
          break;
        }
        default:
          this.badFrames++;
      }
    } catch (err) {
      this.badFrames++;
      this.events.onBadMessage?.(err);
    }
  }

  private compatible(frame: FrameMessage): boolean {
    const counts = new Map(this.init!.objects.map((o) => [o.objectId, o.particleCount]));
    return frame.objects.every((o) => counts.get(o.objectId) === o.dT.length / 3);
  }

  send(data: ArrayBuffer): void {
    this.ws?.send(data);
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
