// Console bootstrap: scenario descriptor, stream connection, render loop,
// HUD readouts, and the operator command panel.

import { ConsoleRenderer } from "./render.js";
import { StreamClient } from "./client.js";
import type { CommandType, ScenarioDescriptor } from "./types.js";
import { ViewState } from "./viewstate.js";

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

async function boot(): Promise<void> {
  const base = location.host || "127.0.0.1:8750";
  let scenario: ScenarioDescriptor | null = null;
  try {
    const res = await fetch(`http://${base}/v1/scenario`);
    scenario = (await res.json()) as ScenarioDescriptor;
  } catch {
    // keep rendering; the stale banner will show until the bridge appears
  }

  const view = new ViewState();
  const canvas = $<HTMLCanvasElement>("view");
  const ctx = canvas.getContext("2d")!;
  const renderer = new ConsoleRenderer(ctx, () => scenario?.v_max ?? 1.0);

  const client = new StreamClient(
    `ws://${base}/v1/stream`,
    {
      onSnapshot: (msg) => view.ingest(msg, performance.now()),
      onClose: () => toast("connection closed", "rejected"),
    },
  );
  client.connect();

  if (scenario) {
    $("scenario-name").textContent = scenario.name;
    const sel = $<HTMLSelectElement>("morph-target");
    for (const name of scenario.formations) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      sel.appendChild(opt);
    }
    $<HTMLInputElement>("speed").max = String(scenario.v_max);
  }

  // --- command panel ---
  function send(type: CommandType, fields: Record<string, unknown>): void {
    view.track(
      ((): string => {
        const { requestId, reply } = client.send(type, fields as any);
        reply.then((r) => {
          view.resolve(r);
          toast(`${type}: ${r.status}${r.reason ? " - " + r.reason : ""}`,
            r.status);
        });
        return requestId;
      })(),
      type,
      performance.now(),
    );
  }

  $("btn-detach").onclick = () =>
    send("detach", { agent_id: Number($<HTMLInputElement>("agent-id").value) });
  $("btn-attach").onclick = () =>
    send("attach", {
      agent_id: Number($<HTMLInputElement>("agent-id").value),
      offset: {
        xyz: [
          Number($<HTMLInputElement>("off-x").value),
          Number($<HTMLInputElement>("off-y").value),
          Number($<HTMLInputElement>("off-z").value),
        ],
      },
    });
  $("btn-morph").onclick = () =>
    send("morph", {
      formation_name: $<HTMLSelectElement>("morph-target").value,
      duration: Number($<HTMLInputElement>("morph-duration").value),
    });
  $("btn-pause").onclick = () => send("pause", {});
  $("btn-resume").onclick = () => send("resume", {});
  $("btn-speed").onclick = () =>
    send("set_speed", { v_max: Number($<HTMLInputElement>("speed").value) });

  // --- camera interaction ---
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
    view.camera.scale = Math.min(Math.max(view.camera.scale * factor, 4), 400);
  });
  let drag: { x: number; y: number } | null = null;
  canvas.addEventListener("mousedown", (ev) => {
    drag = { x: ev.offsetX, y: ev.offsetY };
    view.followVc = false;
    $<HTMLInputElement>("follow").checked = false;
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (!drag) return;
    view.camera.centerX -= (ev.offsetX - drag.x) / view.camera.scale;
    view.camera.centerY += (ev.offsetY - drag.y) / view.camera.scale;
    drag = { x: ev.offsetX, y: ev.offsetY };
  });
  window.addEventListener("mouseup", () => (drag = null));
  $<HTMLInputElement>("follow").onchange = (ev) =>
    (view.followVc = (ev.target as HTMLInputElement).checked);

  // --- render + HUD loop ---
  function frame(): void {
    const now = performance.now();
    view.expirePending(now).forEach((cmd) =>
      toast(`${cmd.type}: timed out`, "rejected"));
    view.prunePending(now);
    renderer.draw(view, now);
    hud();
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);

  function hud(): void {
    const s = view.latest;
    if (!s) return;
    $("hud-t").textContent = s.t.toFixed(2);
    $("hud-phase").textContent = s.phase;
    $("hud-formation").textContent = s.formation.transitioning
      ? `${s.formation.name} (${Math.round(s.formation.transition_progress * 100)}%)`
      : s.formation.name;
    const m = s.metrics;
    $("hud-metrics").textContent = m
      ? `min sep ${m.min_separation?.toFixed(2) ?? "-"} m | ` +
        `align ${Object.values(m.alignment)
          .reduce((a, b) => Math.max(a, b), 0)
          .toFixed(3)} m/s`
      : "-";
    const allowed = view.allowed();
    for (const [key, ok] of Object.entries(allowed)) {
      const btn = document.getElementById(`btn-${key.replace("_", "-")}`);
      if (btn) (btn as HTMLButtonElement).disabled = !ok;
    }
  }
}

function toast(text: string, kind: "accepted" | "rejected"): void {
  const box = $("toasts");
  const el = document.createElement("div");
  el.className = `toast ${kind}`;
  el.textContent = text;
  box.appendChild(el);
  setTimeout(() => el.remove(), 4000);
}

boot();
