// Server payload shapes; the client never derives physics from these,
// it only replays the served state rows.

export interface TrajectoryDTO {
  scenario_id: string;
  block_len: number;
  controls: number[][]; // [steer, accel] per block
  // [x_r, y_r, theta_r, v_r, x_h, y_h, theta_h, v_h] per step
  states: number[][];
}

export interface QueryDTO {
  query_id: string;
  traj_a: TrajectoryDTO;
  traj_b: TrajectoryDTO;
  provenance?: Record<string, unknown>;
}

export interface SessionState {
  answered: number;
  total: number;
  phase: string;
  error: string | null;
}

export type Choice = "A" | "B";
