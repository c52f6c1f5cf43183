// S1: loopback steering against the real bridge. Spawns
// `flock run --scenario reconfig-4to3 --serve <port> --realtime`, connects
// like the browser console does, and checks that a detach command is
// reflected in engine snapshots within 200 ms and that every command gets
// exactly one reply.

import { type ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { StreamClient, type SocketLike } from "../src/client.js";
import type { SnapshotMessage } from "../src/types.js";

const PORT = 8750 + (process.pid % 1000);
const BASE = `127.0.0.1:${PORT}`;

let child: ChildProcess | null = null;

function nodeSocketFactory(url: string): SocketLike {
  const ws = new WebSocket(url);
  return {
    send: (d) => ws.send(d),
    close: () => ws.close(),
    addEventListener: (type, handler) => {
      if (type === "message") {
        ws.on("message", (data) => handler({ data: data.toString() }));
      } else {
        ws.on(type as any, () => handler({}));
      }
    },
  };
}

async function waitForHealth(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastErr: unknown = null;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`http://${BASE}/v1/health`);
      if (res.ok) return;
    } catch (e) {
      lastErr = e;
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error(`bridge never came up on ${BASE}: ${lastErr}`);
}

beforeAll(async () => {
  const out = mkdtempSync(join(tmpdir(), "vcflock-loopback-"));
  child = spawn(
    "flock",
    ["run", "--scenario", "reconfig-4to3", "--out", out,
     "--realtime", "--serve", String(PORT)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  child.on("error", (e) => {
    throw new Error(`could not spawn flock: ${e}`);
  });
  await waitForHealth(30000);
}, 40000);

afterAll(() => {
  child?.kill("SIGTERM");
});

describe("S1 loopback steering", () => {
  it("reflects a detach in snapshots within 200 ms, one reply per command",
    async () => {
      const snapshots: SnapshotMessage[] = [];
      let opened = false;
      const client = new StreamClient(
        `ws://${BASE}/v1/stream`,
        {
          onSnapshot: (m) => snapshots.push(m),
          onOpen: () => (opened = true),
        },
        nodeSocketFactory,
      );
      client.connect();

      const deadline = Date.now() + 15000;
      while (Date.now() < deadline) {
        if (opened && snapshots.length >= 3 &&
            snapshots[snapshots.length - 1].phase === "motion") break;
        await new Promise((r) => setTimeout(r, 25));
      }
      const last = snapshots[snapshots.length - 1];
      expect(last).toBeDefined();
      expect(last.phase).toBe("motion");
      expect(last.agents).toHaveLength(4);

      // scenario descriptor is served alongside the stream
      const desc = await (await fetch(`http://${BASE}/v1/scenario`)).json();
      expect(desc.name).toBe("reconfig-4to3");

      // steer: detach agent 2 and time its visibility in the stream
      const sentAt = performance.now();
      const { reply } = client.send("detach", { agent_id: 2 });
      const r = await reply;
      expect(r.status).toBe("accepted");

      let reflectedAt: number | null = null;
      const reflectDeadline = Date.now() + 5000;
      while (Date.now() < reflectDeadline) {
        const cur = snapshots[snapshots.length - 1];
        const a2 = cur?.agents.find((a) => a.id === 2);
        if (a2?.detached) {
          reflectedAt = performance.now();
          break;
        }
        await new Promise((r2) => setTimeout(r2, 5));
      }
      expect(reflectedAt).not.toBeNull();
      const latencyMs = reflectedAt! - sentAt;
      console.log(`detach reflected in ${latencyMs.toFixed(1)} ms`);
      expect(latencyMs).toBeLessThan(200);

      // a rejected command also gets exactly one reply
      const bad = client.send("detach", { agent_id: 99 });
      const rb = await bad.reply;
      expect(rb.status).toBe("rejected");
      expect(rb.reason).toContain("UnknownAgent");

      // replies were one-per-request: a second wait would only time out
      const dup = await Promise.race([
        bad.reply,
        new Promise((resolve) => setTimeout(() => resolve("no-dup"), 50)),
      ]);
      expect(dup).not.toBe("no-dup"); // same promise, same single value

      client.close();
    }, 30000);
});
