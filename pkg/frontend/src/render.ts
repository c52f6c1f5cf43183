// Zenithal (top-down, x right, y up) canvas rendering. The math that decides
// what gets drawn lives in pure helpers so tests can run without a canvas.

import { speedColor } from "./colormap.js";
import type { AgentSnapshot, SnapshotMessage } from "./types.js";
import type { Camera, ViewState } from "./viewstate.js";

export interface ScreenPoint {
  x: number;
  y: number;
}

export function worldToScreen(
  camera: Camera,
  width: number,
  height: number,
  wx: number,
  wy: number,
): ScreenPoint {
  return {
    x: width / 2 + (wx - camera.centerX) * camera.scale,
    y: height / 2 - (wy - camera.centerY) * camera.scale,
  };
}

export function screenToWorld(
  camera: Camera,
  width: number,
  height: number,
  sx: number,
  sy: number,
): ScreenPoint {
  return {
    x: camera.centerX + (sx - width / 2) / camera.scale,
    y: camera.centerY - (sy - height / 2) / camera.scale,
  };
}

/** Active agents ordered by slot id: the formation outline. */
export function formationPolygon(snapshot: SnapshotMessage): AgentSnapshot[] {
  return snapshot.agents
    .filter((a) => !a.detached && a.slot !== null)
    .sort((a, b) => (a.slot ?? 0) - (b.slot ?? 0));
}

/** During a morph the references preview the incoming layout. */
export function ghostPolygon(snapshot: SnapshotMessage): Array<[number, number]> {
  if (!snapshot.formation.transitioning) return [];
  return formationPolygon(snapshot).map((a) => [a.ref_pos[0], a.ref_pos[1]]);
}

export interface RenderStats {
  frames: number;
  lastAgents: number;
}

export class ConsoleRenderer {
  readonly stats: RenderStats = { frames: 0, lastAgents: 0 };

  constructor(
    private readonly ctx: CanvasRenderingContext2D,
    private readonly vMax: () => number,
  ) {}

  draw(view: ViewState, nowMs: number): void {
    const ctx = this.ctx;
    const { width, height } = ctx.canvas;
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, width, height);
    const s = view.latest;
    if (!s) {
      this.banner("waiting for telemetry...", width, height);
      return;
    }
    this.grid(view.camera, width, height);
    this.trails(view, width, height);
    this.polygon(view, s, width, height);
    this.agents(view, s, width, height);
    this.vcMarker(view, s, width, height);
    if (view.isStale(nowMs)) {
      this.banner(`STALE DATA - last t=${s.t.toFixed(2)} s`, width, height);
    }
    this.stats.frames++;
    this.stats.lastAgents = s.agents.length;
  }

  private grid(camera: Camera, width: number, height: number): void {
    const ctx = this.ctx;
    ctx.strokeStyle = "#1d2430";
    ctx.lineWidth = 1;
    const step = camera.scale; // 1 m
    const x0 = ((width / 2 - camera.centerX * camera.scale) % step + step) % step;
    const y0 = ((height / 2 + camera.centerY * camera.scale) % step + step) % step;
    ctx.beginPath();
    for (let x = x0; x < width; x += step) {
      ctx.moveTo(x, 0);
      ctx.lineTo(x, height);
    }
    for (let y = y0; y < height; y += step) {
      ctx.moveTo(0, y);
      ctx.lineTo(width, y);
    }
    ctx.stroke();
  }

  private trails(view: ViewState, width: number, height: number): void {
    const ctx = this.ctx;
    const vMax = this.vMax();
    for (const ring of view.trails.values()) {
      const pts = ring.points();
      for (let i = 1; i < pts.length; i += 2) {
        const a = worldToScreen(view.camera, width, height, pts[i - 1].x, pts[i - 1].y);
        const b = worldToScreen(view.camera, width, height, pts[i].x, pts[i].y);
        ctx.strokeStyle = speedColor(pts[i].speed, vMax);
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.moveTo(a.x, a.y);
        ctx.lineTo(b.x, b.y);
        ctx.stroke();
      }
    }
  }

  private polygon(view: ViewState, s: SnapshotMessage, width: number, height: number): void {
    const ctx = this.ctx;
    const poly = formationPolygon(s);
    if (poly.length >= 2) {
      ctx.strokeStyle = s.formation.transitioning ? "#557799" : "#88aacc";
      ctx.lineWidth = 1.5;
      ctx.setLineDash(s.formation.transitioning ? [6, 4] : []);
      ctx.beginPath();
      poly.forEach((a, i) => {
        const p = worldToScreen(view.camera, width, height, a.pos[0], a.pos[1]);
        if (i === 0) ctx.moveTo(p.x, p.y);
        else ctx.lineTo(p.x, p.y);
      });
      ctx.closePath();
      ctx.stroke();
      ctx.setLineDash([]);
    }
    const ghost = ghostPolygon(s);
    if (ghost.length >= 2) {
      ctx.strokeStyle = "#44cc8855";
      ctx.lineWidth = 1.5;
      ctx.setLineDash([3, 5]);
      ctx.beginPath();
      ghost.forEach(([x, y], i) => {
        const p = worldToScreen(view.camera, width, height, x, y);
        if (i === 0) ctx.moveTo(p.x, p.y);
        else ctx.lineTo(p.x, p.y);
      });
      ctx.closePath();
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }

  private agents(view: ViewState, s: SnapshotMessage, width: number, height: number): void {
    const ctx = this.ctx;
    const vMax = this.vMax();
    for (const a of s.agents) {
      const p = worldToScreen(view.camera, width, height, a.pos[0], a.pos[1]);
      const speed = Math.hypot(a.vel[0], a.vel[1], a.vel[2]);
      ctx.fillStyle = a.detached ? "#555b66" : speedColor(speed, vMax);
      ctx.beginPath();
      ctx.arc(p.x, p.y, 6, 0, Math.PI * 2);
      ctx.fill();
      ctx.strokeStyle = a.detached ? "#777d88" : "#e8eef6";
      ctx.lineWidth = 1;
      ctx.beginPath();
      ctx.moveTo(p.x, p.y);
      ctx.lineTo(p.x + 12 * Math.cos(a.yaw), p.y - 12 * Math.sin(a.yaw));
      ctx.stroke();
      ctx.fillStyle = a.detached ? "#777d88" : "#c8d2e0";
      ctx.font = "11px monospace";
      ctx.fillText(`${a.id} z${a.pos[2].toFixed(1)}`, p.x + 8, p.y - 8);
    }
  }

  private vcMarker(view: ViewState, s: SnapshotMessage, width: number, height: number): void {
    const ctx = this.ctx;
    const p = worldToScreen(view.camera, width, height, s.vc.pos[0], s.vc.pos[1]);
    ctx.fillStyle = "#e05555";
    ctx.beginPath();
    ctx.arc(p.x, p.y, 4, 0, Math.PI * 2);
    ctx.fill();
    // heading arrow: the formation's front direction
    ctx.strokeStyle = "#4cd964";
    ctx.lineWidth = 2;
    const hx = p.x + 18 * Math.cos(s.vc.yaw);
    const hy = p.y - 18 * Math.sin(s.vc.yaw);
    ctx.beginPath();
    ctx.moveTo(p.x, p.y);
    ctx.lineTo(hx, hy);
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(hx, hy, 2.5, 0, Math.PI * 2);
    ctx.fillStyle = "#4cd964";
    ctx.fill();
  }

  private banner(text: string, width: number, _height: number): void {
    const ctx = this.ctx;
    ctx.fillStyle = "rgba(200, 60, 60, 0.85)";
    ctx.fillRect(0, 0, width, 28);
    ctx.fillStyle = "#fff";
    ctx.font = "13px monospace";
    ctx.fillText(text, 10, 19);
  }
}
