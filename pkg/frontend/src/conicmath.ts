// Turn a real conic a x^2 + b xy + c y^2 + d x + e y + f = 0 into polylines.
//
// Rotate by theta = atan2(b, a - c) / 2 to kill the cross term, then complete
// squares in the rotated frame.  Everything here works in world coordinates;
// the svg layer owns the world-to-screen map.

export interface Viewport {
  xmin: number;
  xmax: number;
  ymin: number;
  ymax: number;
}

export type Point = [number, number];

export interface ConicShape {
  polylines: Point[][];
  badge?: string; // "degenerate" | "no real points" | "point"
}

const SAMPLES = 160;

function rotatePoint(x: number, y: number, cos: number, sin: number): Point {
  return [cos * x - sin * y, sin * x + cos * y];
}

export function renderConic(coeffs: number[], viewport: Viewport): ConicShape {
  const [a, b, c, d, e, f] = coeffs;
  const scale = Math.max(...coeffs.map(Math.abs));
  if (!(scale > 0)) return { polylines: [], badge: "degenerate" };
  const tiny = 1e-9 * scale;

  const theta = 0.5 * Math.atan2(b, a - c);
  const cos = Math.cos(theta);
  const sin = Math.sin(theta);
  // coefficients in the rotated frame (x = cos x' - sin y', y = sin x' + cos y')
  const ar = a * cos * cos + b * sin * cos + c * sin * sin;
  const cr = a * sin * sin - b * sin * cos + c * cos * cos;
  const dr = d * cos + e * sin;
  const er = -d * sin + e * cos;

  const back = (p: Point) => rotatePoint(p[0], p[1], cos, sin);
  const span = Math.hypot(viewport.xmax - viewport.xmin, viewport.ymax - viewport.ymin);
  const cx = (viewport.xmin + viewport.xmax) / 2;
  const cy = (viewport.ymin + viewport.ymax) / 2;
  const reach = span + Math.hypot(cx, cy) + 1;

  if (Math.abs(ar) > tiny && Math.abs(cr) > tiny) {
    const x0 = -dr / (2 * ar);
    const y0 = -er / (2 * cr);
    const rhs = (dr * dr) / (4 * ar) + (er * er) / (4 * cr) - f;
    if (ar * cr > 0) {
      // ellipse family
      if (Math.abs(rhs) <= tiny * Math.max(1, Math.abs(x0) + Math.abs(y0))) {
        return { polylines: [[back([x0, y0])]], badge: "point" };
      }
      if (rhs / ar < 0) return { polylines: [], badge: "no real points" };
      const A = Math.sqrt(rhs / ar);
      const B = Math.sqrt(rhs / cr);
      const ring: Point[] = [];
      for (let i = 0; i <= SAMPLES; i++) {
        const t = (2 * Math.PI * i) / SAMPLES;
        ring.push(back([x0 + A * Math.cos(t), y0 + B * Math.sin(t)]));
      }
      return { polylines: [ring] };
    }
    // hyperbola family
    if (Math.abs(rhs) <= tiny) {
      // crossing line pair through the center
      const sa = Math.sqrt(Math.abs(ar));
      const sc = Math.sqrt(Math.abs(cr));
      const lines: Point[][] = [];
      for (const sgn of [1, -1]) {
        lines.push([
          back([x0 - reach * sc, y0 - sgn * reach * sa]),
          back([x0 + reach * sc, y0 + sgn * reach * sa]),
        ]);
      }
      return { polylines: lines, badge: "degenerate" };
    }
    // orient so the branches open along x'
    const openX = rhs / ar > 0;
    const A = Math.sqrt(Math.abs(rhs / ar));
    const B = Math.sqrt(Math.abs(rhs / cr));
    const tmax = Math.acosh(Math.max(2, reach / Math.min(A, B))) + 0.5;
    const branches: Point[][] = [];
    for (const sgn of [1, -1]) {
      const branch: Point[] = [];
      for (let i = 0; i <= SAMPLES; i++) {
        const t = -tmax + (2 * tmax * i) / SAMPLES;
        if (openX) {
          branch.push(back([x0 + sgn * A * Math.cosh(t), y0 + B * Math.sinh(t)]));
        } else {
          branch.push(back([x0 + A * Math.sinh(t), y0 + sgn * B * Math.cosh(t)]));
        }
      }
      branches.push(branch);
    }
    return { polylines: branches };
  }

  if (Math.abs(ar) > tiny || Math.abs(cr) > tiny) {
    // one square survives: parabola, or parallel lines when the linear
    // term along the other axis vanishes too
    const flip = Math.abs(cr) > tiny; // treat y' as the squared axis by swapping
    const q = flip ? cr : ar;
    const lin = flip ? er : dr; // linear term along the squared axis
    const other = flip ? dr : er;
    if (Math.abs(other) > tiny) {
      const poly: Point[] = [];
      const halfspan = reach;
      for (let i = 0; i <= SAMPLES; i++) {
        const s = -halfspan + (2 * halfspan * i) / SAMPLES;
        const v = -(q * s * s + lin * s + f) / other;
        poly.push(back(flip ? [v, s] : [s, v]));
      }
      return { polylines: [poly] };
    }
    // q s^2 + lin s + f = 0: zero, one, or two parallel lines
    const disc = lin * lin - 4 * q * f;
    if (disc < -tiny * tiny) return { polylines: [], badge: "no real points" };
    const roots = disc <= tiny * tiny
      ? [-lin / (2 * q)]
      : [(-lin + Math.sqrt(disc)) / (2 * q), (-lin - Math.sqrt(disc)) / (2 * q)];
    const lines = roots.map((s) => [
      back(flip ? [-reach, s] : [s, -reach]),
      back(flip ? [reach, s] : [s, reach]),
    ] as Point[]);
    return { polylines: lines, badge: "degenerate" };
  }

  // no quadratic part left: a single line, or nothing
  if (Math.abs(dr) > tiny || Math.abs(er) > tiny) {
    const n = Math.hypot(dr, er);
    const px = (-f * dr) / (n * n);
    const py = (-f * er) / (n * n);
    const ux = -er / n;
    const uy = dr / n;
    return {
      polylines: [[back([px - reach * ux, py - reach * uy]), back([px + reach * ux, py + reach * uy])]],
      badge: "degenerate",
    };
  }
  return { polylines: [], badge: "degenerate" };
}

export function defaultViewport(): Viewport {
  return { xmin: -4, xmax: 4, ymin: -4, ymax: 4 };
}

// Viewport fitted to the characteristic parts of the input loci, padded 20%.
// Closed curves count whole; unbounded branches would blow the box up, so
// they contribute only the sample at the middle of the branch (the vertex).
export function fitViewport(shapes: ConicShape[]): Viewport {
  const anchors: Point[] = [];
  for (const shape of shapes) {
    for (const poly of shape.polylines) {
      if (poly.length === 0) continue;
      const [fx, fy] = poly[0];
      const [lx, ly] = poly[poly.length - 1];
      const closed = Math.hypot(fx - lx, fy - ly) < 1e-9 && poly.length > 2;
      if (closed) anchors.push(...poly);
      else anchors.push(poly[Math.floor(poly.length / 2)]);
    }
  }
  if (anchors.length === 0) return defaultViewport();
  let xmin = Infinity;
  let xmax = -Infinity;
  let ymin = Infinity;
  let ymax = -Infinity;
  for (const [x, y] of anchors) {
    if (x < xmin) xmin = x;
    if (x > xmax) xmax = x;
    if (y < ymin) ymin = y;
    if (y > ymax) ymax = y;
  }
  const half = Math.max((xmax - xmin) / 2, (ymax - ymin) / 2, 1) * 1.2;
  const cx = (xmin + xmax) / 2;
  const cy = (ymin + ymax) / 2;
  return { xmin: cx - half, xmax: cx + half, ymin: cy - half, ymax: cy + half };
}

export function zoomViewport(v: Viewport, factor: number): Viewport {
  const cx = (v.xmin + v.xmax) / 2;
  const cy = (v.ymin + v.ymax) / 2;
  const hx = ((v.xmax - v.xmin) / 2) * factor;
  const hy = ((v.ymax - v.ymin) / 2) * factor;
  return { xmin: cx - hx, xmax: cx + hx, ymin: cy - hy, ymax: cy + hy };
}
