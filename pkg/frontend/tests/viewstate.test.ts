import { describe, expect, it } from "vitest";

import {
  PENDING_TIMEOUT_MS,
  TRAIL_CAPACITY,
  TrailRing,
  ViewState,
  freshRequestId,
} from "../src/viewstate.js";

import { snapshot } from "./helpers.js";


describe("TrailRing", () => {
  it("holds at most its capacity", () => {
    const ring = new TrailRing(10);
    for (let i = 0; i < 35; i++) ring.push({ x: i, y: 0, speed: 0 });
    expect(ring.length).toBe(10);
    const pts = ring.points();
    expect(pts[0].x).toBe(25);
    expect(pts[9].x).toBe(34);
  });

  it("default capacity is the spec bound", () => {
    expect(new TrailRing().capacity).toBe(TRAIL_CAPACITY);
    expect(TRAIL_CAPACITY).toBe(2000);
  });
});

describe("ViewState.ingest", () => {
  it("keeps trails bounded under long feeds", () => {
    const view = new ViewState(50);
    for (let k = 0; k < 500; k++) view.ingest(snapshot(k * 0.05, 12), k);
    expect(view.trails.size).toBe(12);
    for (const ring of view.trails.values()) expect(ring.length).toBe(50);
    expect(view.updates).toBe(500);
  });

  it("follows the centroid when enabled", () => {
    const view = new ViewState();
    view.ingest(snapshot(10), 0);
    expect(view.camera.centerX).toBeCloseTo(5.0);
    view.followVc = false;
    view.ingest(snapshot(20), 1);
    expect(view.camera.centerX).toBeCloseTo(5.0);
  });

  it("reports staleness after a silent second", () => {
    const view = new ViewState();
    expect(view.isStale(0)).toBe(true);
    view.ingest(snapshot(1), 1000);
    expect(view.isStale(1500)).toBe(false);
    expect(view.isStale(2100)).toBe(true);
  });
});

describe("pending commands", () => {
  it("resolves accepted replies once", () => {
    const view = new ViewState();
    const id = freshRequestId();
    view.track(id, "detach", 0);
    const cmd = view.resolve({ request_id: id, status: "accepted", reason: "" });
    expect(cmd?.status).toBe("accepted");
    // a second reply must not flip the state
    view.resolve({ request_id: id, status: "rejected", reason: "dup" });
    expect(view.pending.get(id)?.status).toBe("accepted");
  });

  it("times out after five seconds", () => {
    const view = new ViewState();
    const id = freshRequestId();
    view.track(id, "morph", 1000);
    expect(view.expirePending(1000 + PENDING_TIMEOUT_MS - 1)).toHaveLength(0);
    const expired = view.expirePending(1000 + PENDING_TIMEOUT_MS + 1);
    expect(expired).toHaveLength(1);
    expect(expired[0].status).toBe("timeout");
  });

  it("prunes resolved entries so the map stays bounded", () => {
    const view = new ViewState();
    for (let i = 0; i < 100; i++) {
      const id = freshRequestId();
      view.track(id, "pause", i);
      view.resolve({ request_id: id, status: "accepted", reason: "" });
    }
    view.prunePending(100 + 60001);
    expect(view.pending.size).toBe(0);
  });

  it("generates unique request ids", () => {
    const ids = new Set(Array.from({ length: 500 }, freshRequestId));
    expect(ids.size).toBe(500);
  });
});

describe("command gating", () => {
  it("disables everything before the first snapshot", () => {
    const view = new ViewState();
    const allowed = view.allowed();
    expect(Object.values(allowed).every((v) => !v)).toBe(true);
  });

  it("disables attach when nobody is detached", () => {
    const view = new ViewState();
    view.ingest(snapshot(5), 0);
    const allowed = view.allowed();
    expect(allowed.detach).toBe(true);
    expect(allowed.attach).toBe(false);
    expect(allowed.set_speed).toBe(true);
  });

  it("enables attach once an agent is detached", () => {
    const view = new ViewState();
    view.ingest(snapshot(5, 3, { detached: [1] }), 0);
    expect(view.allowed().attach).toBe(true);
  });

  it("blocks detach and attach during a morph", () => {
    const view = new ViewState();
    view.ingest(snapshot(5, 3, { transitioning: true }), 0);
    const allowed = view.allowed();
    expect(allowed.detach).toBe(false);
    expect(allowed.attach).toBe(false);
    expect(allowed.morph).toBe(true);
  });
});
