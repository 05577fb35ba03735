// Canvas renderer for one trajectory panel: three-lane road, both car
// paths, equal-time markers, and the two cars at the current frame.
// All coordinates come from the served states; no client-side physics.

import {
  LANE_LINES,
  PixelTransform,
  ROAD_HALF_WIDTH,
  ViewBox,
  carCorners,
  fitTransform,
  markerIndices,
  viewBoxFor,
  worldToPixel,
} from "./transform.js";
import type { TrajectoryDTO } from "./types.js";

const COLORS = {
  road: "#3c4048",
  laneLine: "#d0d4da",
  edge: "#f5f6f7",
  robot: "#3b82f6", // blue car: the one the user chooses for
  human: "#ef4444",
  robotPath: "rgba(59, 130, 246, 0.55)",
  humanPath: "rgba(239, 68, 68, 0.45)",
  marker: "#ffffff",
};

const CAR_LENGTH = 0.12; // world units, display only

export interface PanelGeometry {
  transform: PixelTransform;
  view: ViewBox;
}

export function panelGeometry(
  traj: TrajectoryDTO,
  width: number,
  height: number,
): PanelGeometry {
  const view = viewBoxFor([traj.states]);
  return { transform: fitTransform(view, width, height), view };
}

function drawPath(
  ctx: CanvasRenderingContext2D,
  t: PixelTransform,
  states: number[][],
  xi: number,
  yi: number,
  color: string,
) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  states.forEach((row, i) => {
    const [px, py] = worldToPixel(t, row[xi], row[yi]);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
}

function drawCar(
  ctx: CanvasRenderingContext2D,
  t: PixelTransform,
  x: number,
  y: number,
  thetaDeg: number,
  color: string,
) {
  const corners = carCorners(x, y, thetaDeg, CAR_LENGTH);
  ctx.fillStyle = color;
  ctx.beginPath();
  corners.forEach(([wx, wy], i) => {
    const [px, py] = worldToPixel(t, wx, wy);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.closePath();
  ctx.fill();
}

export function renderFrame(
  ctx: CanvasRenderingContext2D,
  traj: TrajectoryDTO,
  frame: number,
  width: number,
  height: number,
): PanelGeometry {
  const geom = panelGeometry(traj, width, height);
  const t = geom.transform;
  ctx.clearRect(0, 0, width, height);

  // road surface and edges
  const [leftPx] = worldToPixel(t, -ROAD_HALF_WIDTH, 0);
  const [rightPx] = worldToPixel(t, ROAD_HALF_WIDTH, 0);
  ctx.fillStyle = COLORS.road;
  ctx.fillRect(leftPx, 0, rightPx - leftPx, height);
  ctx.strokeStyle = COLORS.edge;
  ctx.lineWidth = 3;
  ctx.setLineDash([]);
  for (const edge of [-ROAD_HALF_WIDTH, ROAD_HALF_WIDTH]) {
    const [px] = worldToPixel(t, edge, 0);
    ctx.beginPath();
    ctx.moveTo(px, 0);
    ctx.lineTo(px, height);
    ctx.stroke();
  }

  // dashed lane lines
  ctx.strokeStyle = COLORS.laneLine;
  ctx.lineWidth = 1.5;
  ctx.setLineDash([8, 8]);
  for (const lane of LANE_LINES) {
    const [px] = worldToPixel(t, lane, 0);
    ctx.beginPath();
    ctx.moveTo(px, 0);
    ctx.lineTo(px, height);
    ctx.stroke();
  }
  ctx.setLineDash([]);

  drawPath(ctx, t, traj.states, 0, 1, COLORS.robotPath);
  drawPath(ctx, t, traj.states, 4, 5, COLORS.humanPath);

  // equal-time-interval markers, one per control block
  ctx.fillStyle = COLORS.marker;
  for (const i of markerIndices(traj.states.length, traj.block_len)) {
    const [px, py] = worldToPixel(t, traj.states[i][0], traj.states[i][1]);
    ctx.beginPath();
    ctx.arc(px, py, 2.5, 0, 2 * Math.PI);
    ctx.fill();
  }

  const row = traj.states[Math.min(frame, traj.states.length - 1)];
  drawCar(ctx, t, row[4], row[5], row[6], COLORS.human);
  drawCar(ctx, t, row[0], row[1], row[2], COLORS.robot);
  return geom;
}
