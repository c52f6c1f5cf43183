// WebSocket client for /v1/stream: snapshots dispatched to a callback,
// commands answered by matching request_id (5 s timeout). The socket
// constructor is injectable so node tests can supply `ws`.

import type {
  CommandMessage,
  CommandReply,
  CommandType,
  SnapshotMessage,
} from "./types.js";
import { isReply, isSnapshot } from "./types.js";
import { PENDING_TIMEOUT_MS, freshRequestId } from "./viewstate.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, handler: (ev: any) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientEvents {
  onSnapshot?: (msg: SnapshotMessage) => void;
  onOpen?: () => void;
  onClose?: () => void;
}

export class StreamClient {
  private sock: SocketLike | null = null;
  private waiting = new Map<
    string,
    { resolve: (r: CommandReply) => void; timer: ReturnType<typeof setTimeout> }
  >();

  constructor(
    private readonly url: string,
    private readonly events: ClientEvents = {},
    private readonly factory: SocketFactory = (u) =>
      new (globalThis as any).WebSocket(u) as SocketLike,
  ) {}

  connect(): void {
    const sock = this.factory(this.url);
    this.sock = sock;
    sock.addEventListener("open", () => this.events.onOpen?.());
    sock.addEventListener("close", () => {
      this.events.onClose?.();
      this.failAll("connection closed");
    });
    sock.addEventListener("message", (ev: any) => {
      let msg: unknown;
      try {
        msg = JSON.parse(typeof ev.data === "string" ? ev.data : ev.data.toString());
      } catch {
        return;
      }
      if (isSnapshot(msg)) {
        this.events.onSnapshot?.(msg);
      } else if (isReply(msg)) {
        this.settle(msg);
      }
    });
  }

  close(): void {
    this.sock?.close();
    this.sock = null;
  }

  /** Send one command; resolves with its reply or a local timeout rejection. */
  send(
    type: CommandType,
    fields: Omit<CommandMessage, "request_id" | "type"> = {},
    timeoutMs: number = PENDING_TIMEOUT_MS,
  ): { requestId: string; reply: Promise<CommandReply> } {
    const requestId = freshRequestId();
    const msg: CommandMessage = { request_id: requestId, type, ...fields };
    const reply = new Promise<CommandReply>((resolve) => {
      const timer = setTimeout(() => {
        this.waiting.delete(requestId);
        resolve({
          request_id: requestId,
          status: "rejected",
          reason: "timeout: no reply within 5 s",
        });
      }, timeoutMs);
      this.waiting.set(requestId, { resolve, timer });
    });
    if (!this.sock) {
      throw new Error("not connected");
    }
    this.sock.send(JSON.stringify(msg));
    return { requestId, reply };
  }

  private settle(reply: CommandReply): void {
    if (reply.request_id === null) return;
    const entry = this.waiting.get(reply.request_id);
    if (!entry) return;
    clearTimeout(entry.timer);
    this.waiting.delete(reply.request_id);
    entry.resolve(reply);
  }

  private failAll(reason: string): void {
    for (const [id, entry] of this.waiting) {
      clearTimeout(entry.timer);
      entry.resolve({ request_id: id, status: "rejected", reason });
    }
    this.waiting.clear();
  }
}
