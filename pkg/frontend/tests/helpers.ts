import type { SnapshotMessage } from "../src/types.js";

export function snapshot(t: number, agents = 3, opts: Partial<{
  detached: number[];
  transitioning: boolean;
  phase: "setup" | "motion" | "idle";
}> = {}): SnapshotMessage {
  const detached = new Set(opts.detached ?? []);
  return {
    schema_version: 1,
    t,
    phase: opts.phase ?? "motion",
    vc: { pos: [t * 0.5, 0, 1], yaw: 0, vel: [0.5, 0, 0] },
    agents: Array.from({ length: agents }, (_, i) => ({
      id: i,
      slot: detached.has(i) ? null : i,
      pos: [t * 0.5 + i, i, 1] as [number, number, number],
      yaw: 0,
      vel: [0.5, 0, 0] as [number, number, number],
      ref_pos: [t * 0.5 + i, i, 1] as [number, number, number],
      detached: detached.has(i),
    })),
    formation: {
      name: "test",
      slot_count: agents - detached.size,
      transitioning: opts.transitioning ?? false,
      transition_progress: opts.transitioning ? 0.5 : 0,
    },
  };
}
