import { describe, expect, it } from "vitest";

import { defaultViewport, fitViewport, renderConic, zoomViewport } from "../src/conicmath";

const V = defaultViewport();

function nearestDistance(polys: [number, number][][], p: [number, number]): number {
  let best = Infinity;
  for (const poly of polys) {
    for (const [x, y] of poly) {
      best = Math.min(best, Math.hypot(x - p[0], y - p[1]));
    }
  }
  return best;
}

describe("renderConic", () => {
  it("draws the unit circle as a closed curve through the four axis points", () => {
    const shape = renderConic([1, 0, 1, 0, 0, -1], V);
    expect(shape.badge).toBeUndefined();
    expect(shape.polylines).toHaveLength(1);
    const ring = shape.polylines[0];
    const [fx, fy] = ring[0];
    const [lx, ly] = ring[ring.length - 1];
    expect(Math.hypot(fx - lx, fy - ly)).toBeLessThan(1e-9);
    // pixel tolerance: one sample step along the circle
    const tol = (2 * Math.PI) / 160;
    for (const p of [[1, 0], [-1, 0], [0, 1], [0, -1]] as [number, number][]) {
      expect(nearestDistance(shape.polylines, p)).toBeLessThan(tol);
    }
    for (const [x, y] of ring) {
      expect(Math.hypot(x, y)).toBeCloseTo(1, 9);
    }
  });

  it("draws x^2 - y^2 - 1 as two branches that avoid the y-axis", () => {
    const shape = renderConic([1, 0, -1, 0, 0, -1], V);
    expect(shape.badge).toBeUndefined();
    expect(shape.polylines).toHaveLength(2);
    const signs = shape.polylines.map((poly) => {
      for (const [x] of poly) expect(Math.abs(x)).toBeGreaterThanOrEqual(1);
      return Math.sign(poly[0][0]);
    });
    expect(signs.sort()).toEqual([-1, 1]);
    // every sampled point satisfies the equation
    for (const poly of shape.polylines) {
      for (const [x, y] of poly) {
        expect(Math.abs(x * x - y * y - 1)).toBeLessThan(1e-6 * (1 + x * x + y * y));
      }
    }
  });

  it("renders (x+y)^2 as a line with a degenerate badge", () => {
    const shape = renderConic([1, 2, 1, 0, 0, 0], V);
    expect(shape.badge).toBe("degenerate");
    expect(shape.polylines.length).toBeGreaterThanOrEqual(1);
    for (const poly of shape.polylines) {
      for (const [x, y] of poly) {
        expect(Math.abs(x + y)).toBeLessThan(1e-6 * (1 + Math.abs(x) + Math.abs(y)));
      }
    }
  });

  it("flags an empty real locus", () => {
    expect(renderConic([1, 0, 1, 0, 0, 1], V).badge).toBe("no real points");
    expect(renderConic([1, 0, 1, 0, 0, 1], V).polylines).toHaveLength(0);
  });

  it("reduces a point conic to a single dot", () => {
    const shape = renderConic([1, 0, 1, 0, 0, 0], V);
    expect(shape.badge).toBe("point");
    expect(shape.polylines).toEqual([[[0, 0]]]);
  });

  it("handles a parabola as a single unbounded arc", () => {
    const shape = renderConic([1, 0, 0, 0, -1, 0], V); // y = x^2
    expect(shape.badge).toBeUndefined();
    expect(shape.polylines).toHaveLength(1);
    for (const [x, y] of shape.polylines[0]) {
      expect(Math.abs(y - x * x)).toBeLessThan(1e-6 * (1 + x * x));
    }
  });

  it("splits a crossing line pair and badges it", () => {
    const shape = renderConic([1, 0, -1, 0, 0, 0], V); // (x-y)(x+y)
    expect(shape.badge).toBe("degenerate");
    expect(shape.polylines).toHaveLength(2);
  });
});

describe("viewport helpers", () => {
  it("fits a padded square box around closed input loci", () => {
    const circle = renderConic([1, 0, 1, 0, 0, -4], V); // radius 2
    const box = fitViewport([circle]);
    expect(box.xmin).toBeLessThan(-2);
    expect(box.xmax).toBeGreaterThan(2);
    expect(box.xmax - box.xmin).toBeCloseTo(box.ymax - box.ymin, 9);
    expect(box.xmax - box.xmin).toBeLessThan(6);
  });

  it("does not let hyperbola branches blow the box up", () => {
    const hyp = renderConic([1, 0, -1, 0, 0, -1], V);
    const box = fitViewport([hyp]);
    expect(box.xmax - box.xmin).toBeLessThan(20);
  });

  it("zooms about the center", () => {
    const z = zoomViewport(defaultViewport(), 0.5);
    expect(z).toEqual({ xmin: -2, xmax: 2, ymin: -2, ymax: 2 });
  });
});
