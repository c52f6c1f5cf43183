// Wire schema for the telemetry bridge (one JSON document per message).

export interface AgentSnapshot {
  id: number;
  slot: number | null;
  pos: [number, number, number];
  yaw: number;
  vel: [number, number, number];
  ref_pos: [number, number, number];
  detached: boolean;
}

export interface SnapshotMessage {
  schema_version: number;
  t: number;
  phase: "setup" | "motion" | "idle";
  vc: {
    pos: [number, number, number];
    yaw: number;
    vel: [number, number, number];
  };
  agents: AgentSnapshot[];
  formation: {
    name: string;
    slot_count: number;
    transitioning: boolean;
    transition_progress: number;
  };
  metrics?: {
    cohesion: Record<string, number>;
    reference_error: Record<string, number>;
    alignment: Record<string, number>;
    min_separation: number | null;
  };
}

export type CommandType =
  | "detach"
  | "attach"
  | "morph"
  | "pause"
  | "resume"
  | "set_speed";

export interface CommandMessage {
  request_id: string;
  type: CommandType;
  agent_id?: number;
  offset?: { xyz: [number, number, number]; yaw_deg?: number };
  formation_name?: string;
  duration?: number;
  v_max?: number;
}

export interface CommandReply {
  request_id: string | null;
  status: "accepted" | "rejected";
  reason: string;
}

export interface ScenarioDescriptor {
  name: string;
  description: string;
  agent_count: number;
  model: string;
  v_max: number;
  dt: number;
  snapshot_hz: number;
  formation: string;
  formations: string[];
  d_min: number;
  d_max: number;
}

export function isSnapshot(msg: unknown): msg is SnapshotMessage {
  return (
    typeof msg === "object" &&
    msg !== null &&
    "schema_version" in msg &&
    "agents" in msg &&
    "vc" in msg
  );
}

export function isReply(msg: unknown): msg is CommandReply {
  return (
    typeof msg === "object" &&
    msg !== null &&
    "status" in msg &&
    !("schema_version" in msg)
  );
}
