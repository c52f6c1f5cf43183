import { describe, expect, it } from "vitest";

import {
  formationPolygon,
  ghostPolygon,
  screenToWorld,
  worldToScreen,
} from "../src/render.js";
import { speedColor } from "../src/colormap.js";
import { snapshot } from "./helpers.js";

const CAM = { centerX: 2, centerY: 3, scale: 40 };

describe("camera transform", () => {
  it("centers the camera target", () => {
    const p = worldToScreen(CAM, 800, 600, 2, 3);
    expect(p).toEqual({ x: 400, y: 300 });
  });

  it("y grows upward in world space", () => {
    const p = worldToScreen(CAM, 800, 600, 2, 4);
    expect(p.y).toBeLessThan(300);
  });

  it("round trips", () => {
    const s = worldToScreen(CAM, 800, 600, -3.7, 9.2);
    const w = screenToWorld(CAM, 800, 600, s.x, s.y);
    expect(w.x).toBeCloseTo(-3.7, 9);
    expect(w.y).toBeCloseTo(9.2, 9);
  });
});

describe("formation polygon", () => {
  it("orders active agents by slot and drops detached ones", () => {
    const s = snapshot(1, 4, { detached: [2] });
    const poly = formationPolygon(s);
    expect(poly.map((a) => a.id)).toEqual([0, 1, 3]);
  });

  it("ghost outline appears only while transitioning", () => {
    expect(ghostPolygon(snapshot(1, 3))).toHaveLength(0);
    const ghost = ghostPolygon(snapshot(1, 3, { transitioning: true }));
    expect(ghost).toHaveLength(3);
  });
});

describe("speed colormap", () => {
  it("clamps to the range ends", () => {
    expect(speedColor(-1, 0.5)).toBe(speedColor(0, 0.5));
    expect(speedColor(9, 0.5)).toBe(speedColor(0.5, 0.5));
  });

  it("scales with the scenario v_max", () => {
    expect(speedColor(0.25, 0.5)).toBe(speedColor(1.0, 2.0));
  });

  it("returns css rgb strings", () => {
    expect(speedColor(0.3, 0.5)).toMatch(/^rgb\(\d+,\d+,\d+\)$/);
  });

  it("degenerate v_max falls back to the cold end", () => {
    expect(speedColor(1.0, 0)).toBe(speedColor(0, 1));
  });
});
