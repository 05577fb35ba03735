// Affine world-to-pixel mapping for the top-down road view.
//
// World x (lane offset) maps to pixel x, world y (driving direction) maps
// upward, so pixel y is flipped. The transform is invertible so tests can
// recover served coordinates from rendered ones exactly.

export const LANE_WIDTH = 0.17;
export const LANE_LINES = [-0.085, 0.085];
export const ROAD_HALF_WIDTH = 0.255;
export const CAR_ASPECT = 7 / 3; // length / width, top-down rectangle

export interface ViewBox {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export interface PixelTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** Fit the world box into a canvas, preserving aspect ratio. */
export function fitTransform(
  view: ViewBox,
  width: number,
  height: number,
): PixelTransform {
  const sx = width / (view.xMax - view.xMin);
  const sy = height / (view.yMax - view.yMin);
  const scale = Math.min(sx, sy);
  // center the world box in the canvas
  const offsetX = (width - scale * (view.xMax - view.xMin)) / 2 - scale * view.xMin;
  const offsetY = (height - scale * (view.yMax - view.yMin)) / 2 + scale * view.yMax;
  return { scale, offsetX, offsetY };
}

export function worldToPixel(t: PixelTransform, x: number, y: number): [number, number] {
  return [t.scale * x + t.offsetX, -t.scale * y + t.offsetY];
}

export function pixelToWorld(t: PixelTransform, px: number, py: number): [number, number] {
  return [(px - t.offsetX) / t.scale, (t.offsetY - py) / t.scale];
}

/** View box covering the road and both trajectories with a margin. */
export function viewBoxFor(states: number[][][], margin = 0.1): ViewBox {
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const traj of states) {
    for (const row of traj) {
      yMin = Math.min(yMin, row[1], row[5]);
      yMax = Math.max(yMax, row[1], row[5]);
    }
  }
  return {
    xMin: -ROAD_HALF_WIDTH - margin,
    xMax: ROAD_HALF_WIDTH + margin,
    yMin: yMin - margin,
    yMax: yMax + margin,
  };
}

/** Corners of an oriented car rectangle (world units), length along heading. */
export function carCorners(
  x: number,
  y: number,
  thetaDeg: number,
  length: number,
): [number, number][] {
  const width = length / CAR_ASPECT;
  const th = (thetaDeg * Math.PI) / 180;
  const ux = Math.cos(th);
  const uy = Math.sin(th);
  // perpendicular (left of heading)
  const px = -uy;
  const py = ux;
  const hl = length / 2;
  const hw = width / 2;
  return [
    [x + hl * ux + hw * px, y + hl * uy + hw * py],
    [x + hl * ux - hw * px, y + hl * uy - hw * py],
    [x - hl * ux - hw * px, y - hl * uy - hw * py],
    [x - hl * ux + hw * px, y - hl * uy + hw * py],
  ];
}

/** Indices of the states carrying equal-time-interval markers: one per
 * control block boundary (the trajectory has blocks * blockLen + 1 states). */
export function markerIndices(nStates: number, blockLen: number): number[] {
  const out: number[] = [];
  for (let i = blockLen; i < nStates; i += blockLen) out.push(i);
  return out;
}
