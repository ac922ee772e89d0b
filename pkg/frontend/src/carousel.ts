// Carousel over the real solutions of a solve.  Pure state in, state out;
// the dom layer reads `current` and repaints.

import type { SolutionEntry } from "./api";

export type Filter = "all" | "Ellipse" | "Hyperbola";

export interface CarouselState {
  realIndices: number[]; // indices into the full solution list, reals only
  visible: number[]; // realIndices filtered by class
  pos: number; // position within visible; -1 when visible is empty
  filter: Filter;
}

function applyFilter(solutions: SolutionEntry[], realIndices: number[], filter: Filter): number[] {
  if (filter === "all") return realIndices.slice();
  return realIndices.filter((i) => solutions[i].class === filter);
}

export function makeCarousel(solutions: SolutionEntry[]): CarouselState {
  const realIndices: number[] = [];
  solutions.forEach((s, i) => {
    if (s.real) realIndices.push(i);
  });
  return {
    realIndices,
    visible: realIndices.slice(),
    pos: realIndices.length > 0 ? 0 : -1,
    filter: "all",
  };
}

export function setFilter(
  state: CarouselState,
  solutions: SolutionEntry[],
  filter: Filter,
): CarouselState {
  const visible = applyFilter(solutions, state.realIndices, filter);
  const keep = state.pos >= 0 ? visible.indexOf(state.visible[state.pos]) : -1;
  return {
    ...state,
    visible,
    filter,
    pos: keep >= 0 ? keep : visible.length > 0 ? 0 : -1,
  };
}

export function step(state: CarouselState, delta: number): CarouselState {
  if (state.visible.length === 0) return state;
  const n = state.visible.length;
  return { ...state, pos: (((state.pos + delta) % n) + n) % n };
}

export function jumpTo(state: CarouselState, solutionIndex: number): CarouselState {
  const pos = state.visible.indexOf(solutionIndex);
  return pos >= 0 ? { ...state, pos } : state;
}

export function current(state: CarouselState): number | null {
  return state.pos >= 0 ? state.visible[state.pos] : null;
}
