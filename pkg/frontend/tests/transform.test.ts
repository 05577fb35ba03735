import { describe, expect, it } from "vitest";

import {
  CAR_ASPECT,
  LANE_LINES,
  ROAD_HALF_WIDTH,
  carCorners,
  fitTransform,
  markerIndices,
  pixelToWorld,
  viewBoxFor,
  worldToPixel,
} from "../src/transform.js";

const view = { xMin: -0.355, xMax: 0.355, yMin: -0.1, yMax: 4.0 };

describe("pixel transform", () => {
  it("is invertible to floating point precision", () => {
    const t = fitTransform(view, 260, 480);
    const points: [number, number][] = [
      [0, 0],
      [0.17, 3.2],
      [-0.255, 0.5],
      [0.01, 3.999],
    ];
    for (const [x, y] of points) {
      const [px, py] = worldToPixel(t, x, y);
      const [bx, by] = pixelToWorld(t, px, py);
      expect(bx).toBeCloseTo(x, 12);
      expect(by).toBeCloseTo(y, 12);
    }
  });

  it("maps larger world y to smaller pixel y (up is forward)", () => {
    const t = fitTransform(view, 260, 480);
    const [, lowPy] = worldToPixel(t, 0, 0.0);
    const [, highPy] = worldToPixel(t, 0, 3.0);
    expect(highPy).toBeLessThan(lowPy);
  });

  it("preserves aspect ratio and stays inside the canvas", () => {
    const t = fitTransform(view, 260, 480);
    for (const [x, y] of [
      [view.xMin, view.yMin],
      [view.xMax, view.yMax],
    ]) {
      const [px, py] = worldToPixel(t, x, y);
      expect(px).toBeGreaterThanOrEqual(-1e-9);
      expect(px).toBeLessThanOrEqual(260 + 1e-9);
      expect(py).toBeGreaterThanOrEqual(-1e-9);
      expect(py).toBeLessThanOrEqual(480 + 1e-9);
    }
  });

  it("centers the world box", () => {
    const t = fitTransform(view, 260, 480);
    const cx = (view.xMin + view.xMax) / 2;
    const cy = (view.yMin + view.yMax) / 2;
    const [px, py] = worldToPixel(t, cx, cy);
    expect(px).toBeCloseTo(130, 9);
    expect(py).toBeCloseTo(240, 9);
  });
});

describe("view box", () => {
  it("covers both cars' y range plus a margin", () => {
    const states = [
      [
        [0, 0, 90, 1, 0.17, 0.3, 90, 0.8],
        [0, 3.4, 90, 1, 0.17, 4.1, 90, 0.8],
      ],
    ];
    const v = viewBoxFor(states, 0.1);
    expect(v.yMin).toBeCloseTo(-0.1, 12);
    expect(v.yMax).toBeCloseTo(4.2, 12);
    expect(v.xMax).toBeCloseTo(ROAD_HALF_WIDTH + 0.1, 12);
  });
});

describe("car rectangle", () => {
  it("has the 7/3 aspect ratio", () => {
    const corners = carCorners(0, 0, 90, 0.14);
    const side = (a: number[], b: number[]) => Math.hypot(a[0] - b[0], a[1] - b[1]);
    const w = side(corners[0], corners[1]);
    const l = side(corners[1], corners[2]);
    expect(l / w).toBeCloseTo(CAR_ASPECT, 12);
  });

  it("points along the heading", () => {
    // heading 90 deg: front edge has larger y than the center
    const corners = carCorners(0.1, 2.0, 90, 0.14);
    const frontY = (corners[0][1] + corners[1][1]) / 2;
    const rearY = (corners[2][1] + corners[3][1]) / 2;
    expect(frontY).toBeGreaterThan(2.0);
    expect(rearY).toBeLessThan(2.0);
    expect(frontY - rearY).toBeCloseTo(0.14, 12);
  });

  it("is centered on the car position", () => {
    const corners = carCorners(0.3, 1.5, 37, 0.14);
    const cx = corners.reduce((s, c) => s + c[0], 0) / 4;
    const cy = corners.reduce((s, c) => s + c[1], 0) / 4;
    expect(cx).toBeCloseTo(0.3, 12);
    expect(cy).toBeCloseTo(1.5, 12);
  });
});

describe("markers", () => {
  it("one marker per control block", () => {
    // 5 blocks of 10 steps: 51 states, markers at 10..50
    const idx = markerIndices(51, 10);
    expect(idx).toEqual([10, 20, 30, 40, 50]);
  });

  it("marker count equals the number of blocks", () => {
    expect(markerIndices(51, 10).length).toBe(5);
    expect(markerIndices(21, 5).length).toBe(4);
  });
});

describe("lane constants", () => {
  it("lane lines sit halfway between lane centers", () => {
    expect(LANE_LINES).toEqual([-0.085, 0.085]);
  });
});
