import { describe, expect, it } from "vitest";

import { StreamClient, type SocketLike } from "../src/client.js";
import type { SnapshotMessage } from "../src/types.js";
import { snapshot } from "./helpers.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  handlers = new Map<string, Array<(ev: any) => void>>();
  closed = false;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.emit("close", {});
  }

  addEventListener(type: string, handler: (ev: any) => void): void {
    const list = this.handlers.get(type) ?? [];
    list.push(handler);
    this.handlers.set(type, list);
  }

  emit(type: string, ev: any): void {
    for (const h of this.handlers.get(type) ?? []) h(ev);
  }
}

function makeClient() {
  const sock = new FakeSocket();
  const snapshots: SnapshotMessage[] = [];
  const client = new StreamClient(
    "ws://test/v1/stream",
    { onSnapshot: (m) => snapshots.push(m) },
    () => sock,
  );
  client.connect();
  return { client, sock, snapshots };
}

describe("StreamClient", () => {
  it("dispatches snapshots", () => {
    const { sock, snapshots } = makeClient();
    sock.emit("message", { data: JSON.stringify(snapshot(2.5)) });
    expect(snapshots).toHaveLength(1);
    expect(snapshots[0].t).toBe(2.5);
  });

  it("ignores malformed frames without dying", () => {
    const { sock, snapshots } = makeClient();
    sock.emit("message", { data: "{nope" });
    sock.emit("message", { data: JSON.stringify(snapshot(1)) });
    expect(snapshots).toHaveLength(1);
  });

  it("matches replies to request ids, exactly one resolution each", async () => {
    const { client, sock } = makeClient();
    const a = client.send("detach", { agent_id: 1 });
    const b = client.send("pause");
    const sentA = JSON.parse(sock.sent[0]);
    const sentB = JSON.parse(sock.sent[1]);
    expect(sentA.request_id).toBe(a.requestId);
    expect(sentA.type).toBe("detach");
    expect(sentA.agent_id).toBe(1);
    // replies out of order
    sock.emit("message", {
      data: JSON.stringify({ request_id: sentB.request_id,
                            status: "accepted", reason: "" }),
    });
    sock.emit("message", {
      data: JSON.stringify({ request_id: sentA.request_id,
                             status: "rejected", reason: "UnknownAgent: 1" }),
    });
    const [ra, rb] = await Promise.all([a.reply, b.reply]);
    expect(ra.status).toBe("rejected");
    expect(ra.reason).toContain("UnknownAgent");
    expect(rb.status).toBe("accepted");
  });

  it("duplicate replies are ignored", async () => {
    const { client, sock } = makeClient();
    const { requestId, reply } = client.send("resume");
    const payload = JSON.stringify({ request_id: requestId,
                                     status: "accepted", reason: "" });
    sock.emit("message", { data: payload });
    sock.emit("message", { data: payload });
    expect((await reply).status).toBe("accepted");
  });

  it("resolves with a local timeout rejection when no reply comes", async () => {
    const { client } = makeClient();
    const { reply } = client.send("pause", {}, 30);
    const r = await reply;
    expect(r.status).toBe("rejected");
    expect(r.reason).toContain("timeout");
  });

  it("fails pending commands when the socket closes", async () => {
    const { client, sock } = makeClient();
    const { reply } = client.send("pause");
    sock.emit("close", {});
    const r = await reply;
    expect(r.status).toBe("rejected");
    expect(r.reason).toContain("closed");
  });

  it("throws when sending while disconnected", () => {
    const sock = new FakeSocket();
    const client = new StreamClient("ws://x", {}, () => sock);
    expect(() => client.send("pause")).toThrow(/not connected/);
  });
});
