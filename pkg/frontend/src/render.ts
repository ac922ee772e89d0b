// svg scene painting: world coordinates in, <polyline>/<circle> elements out

import type { ConicShape, Point, Viewport } from "./conicmath";

export const VIEW_W = 640;
export const VIEW_H = 640;

const SVG_NS = "http://www.w3.org/2000/svg";

export interface Curve {
  shape: ConicShape;
  cls: string; // css class; carries the color
  tag?: string; // lands in data-conic on every piece of the curve
}

export interface Marker {
  at: Point;
  cls: string;
}

export interface Scene {
  viewport: Viewport;
  curves: Curve[];
  markers: Marker[];
}

function toScreen(p: Point, v: Viewport): Point {
  const sx = ((p[0] - v.xmin) / (v.xmax - v.xmin)) * VIEW_W;
  const sy = VIEW_H - ((p[1] - v.ymin) / (v.ymax - v.ymin)) * VIEW_H;
  return [sx, sy];
}

function polylineEl(doc: Document, pts: Point[], cls: string, v: Viewport): SVGElement {
  const el = doc.createElementNS(SVG_NS, "polyline");
  el.setAttribute("class", cls);
  el.setAttribute("fill", "none");
  el.setAttribute(
    "points",
    pts.map((p) => toScreen(p, v).map((c) => c.toFixed(2)).join(",")).join(" "),
  );
  return el;
}

export function paintScene(svg: SVGElement, scene: Scene): void {
  const doc = svg.ownerDocument;
  while (svg.firstChild) svg.removeChild(svg.firstChild);
  svg.setAttribute("viewBox", `0 0 ${VIEW_W} ${VIEW_H}`);

  // axes, clipped to the viewport
  const v = scene.viewport;
  for (const axis of [
    [[v.xmin, 0], [v.xmax, 0]],
    [[0, v.ymin], [0, v.ymax]],
  ] as Point[][]) {
    svg.appendChild(polylineEl(doc, axis, "axis", v));
  }

  for (const curve of scene.curves) {
    for (const poly of curve.shape.polylines) {
      const el =
        poly.length === 1
          ? markerEl(doc, poly[0], curve.cls, v) // point conic: a dot
          : polylineEl(doc, poly, curve.cls, v);
      if (curve.tag !== undefined) el.setAttribute("data-conic", curve.tag);
      svg.appendChild(el);
    }
  }
  for (const marker of scene.markers) {
    svg.appendChild(markerEl(doc, marker.at, marker.cls, v));
  }
}

function markerEl(doc: Document, at: Point, cls: string, v: Viewport): SVGElement {
  const [sx, sy] = toScreen(at, v);
  const el = doc.createElementNS(SVG_NS, "circle");
  el.setAttribute("class", cls);
  el.setAttribute("cx", sx.toFixed(2));
  el.setAttribute("cy", sy.toFixed(2));
  el.setAttribute("r", "4");
  return el;
}
