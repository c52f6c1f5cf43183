// Client-side view model. Holds nothing authoritative: every displayed
// quantity derives from the latest SnapshotMessage; the ring buffers only
// remember where agents have been for trail rendering.

import type { CommandReply, SnapshotMessage } from "./types.js";

export const TRAIL_CAPACITY = 2000;
export const PENDING_TIMEOUT_MS = 5000;

export interface TrailPoint {
  x: number;
  y: number;
  speed: number;
}

/** Fixed-capacity ring; push overwrites the oldest point. */
export class TrailRing {
  private buf: TrailPoint[];
  private head = 0;
  private count = 0;

  constructor(readonly capacity: number = TRAIL_CAPACITY) {
    this.buf = new Array(capacity);
  }

  push(p: TrailPoint): void {
    this.buf[this.head] = p;
    this.head = (this.head + 1) % this.capacity;
    if (this.count < this.capacity) this.count++;
  }

  get length(): number {
    return this.count;
  }

  /** Oldest to newest. */
  points(): TrailPoint[] {
    const out: TrailPoint[] = new Array(this.count);
    const start = (this.head - this.count + this.capacity * 2) % this.capacity;
    for (let i = 0; i < this.count; i++) {
      out[i] = this.buf[(start + i) % this.capacity];
    }
    return out;
  }
}

export interface PendingCommand {
  requestId: string;
  type: string;
  sentAt: number;
  status: "pending" | "accepted" | "rejected" | "timeout";
  reason: string;
}

export interface Camera {
  centerX: number;
  centerY: number;
  scale: number; // pixels per meter
}

export class ViewState {
  latest: SnapshotMessage | null = null;
  lastMessageAt = 0; // wall-clock ms of last snapshot
  updates = 0; // snapshot ingest counter
  trails = new Map<number, TrailRing>();
  pending = new Map<string, PendingCommand>();
  camera: Camera = { centerX: 0, centerY: 0, scale: 40 };
  followVc = true;

  constructor(readonly trailCapacity: number = TRAIL_CAPACITY) {}

  ingest(msg: SnapshotMessage, nowMs: number): void {
    this.latest = msg;
    this.lastMessageAt = nowMs;
    this.updates++;
    for (const a of msg.agents) {
      let ring = this.trails.get(a.id);
      if (!ring) {
        ring = new TrailRing(this.trailCapacity);
        this.trails.set(a.id, ring);
      }
      const speed = Math.hypot(a.vel[0], a.vel[1], a.vel[2]);
      ring.push({ x: a.pos[0], y: a.pos[1], speed });
    }
    if (this.followVc) {
      this.camera.centerX = msg.vc.pos[0];
      this.camera.centerY = msg.vc.pos[1];
    }
  }

  /** True when no snapshot arrived for a full second. */
  isStale(nowMs: number, thresholdMs = 1000): boolean {
    return this.latest === null || nowMs - this.lastMessageAt > thresholdMs;
  }

  track(requestId: string, type: string, nowMs: number): PendingCommand {
    const cmd: PendingCommand = {
      requestId,
      type,
      sentAt: nowMs,
      status: "pending",
      reason: "",
    };
    this.pending.set(requestId, cmd);
    return cmd;
  }

  resolve(reply: CommandReply): PendingCommand | undefined {
    if (reply.request_id === null) return undefined;
    const cmd = this.pending.get(reply.request_id);
    if (!cmd || cmd.status !== "pending") return cmd;
    cmd.status = reply.status;
    cmd.reason = reply.reason;
    return cmd;
  }

  /** Mark overdue commands; returns the ones that just timed out. */
  expirePending(nowMs: number, timeoutMs = PENDING_TIMEOUT_MS): PendingCommand[] {
    const expired: PendingCommand[] = [];
    for (const cmd of this.pending.values()) {
      if (cmd.status === "pending" && nowMs - cmd.sentAt > timeoutMs) {
        cmd.status = "timeout";
        cmd.reason = "no reply within 5 s";
        expired.push(cmd);
      }
    }
    return expired;
  }

  /** Drop resolved entries older than a minute to keep the map bounded. */
  prunePending(nowMs: number, keepMs = 60000): void {
    for (const [id, cmd] of this.pending) {
      if (cmd.status !== "pending" && nowMs - cmd.sentAt > keepMs) {
        this.pending.delete(id);
      }
    }
  }

  /** Command-panel gating derived from the latest snapshot only. */
  allowed(): Record<string, boolean> {
    const s = this.latest;
    const inMotion = s?.phase === "motion";
    const anyActive = !!s && s.agents.some((a) => !a.detached);
    const anyDetached = !!s && s.agents.some((a) => a.detached);
    const notTransitioning = !!s && !s.formation.transitioning;
    return {
      detach: !!s && anyActive && notTransitioning,
      attach: !!s && anyDetached && notTransitioning,
      morph: !!s && anyActive,
      pause: inMotion,
      resume: inMotion,
      set_speed: inMotion,
    };
  }
}

let counter = 0;

export function freshRequestId(): string {
  counter += 1;
  return `c${Date.now().toString(36)}-${counter}`;
}
