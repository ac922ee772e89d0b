// Types mirroring the solve service documents, plus a thin client that
// tags every request with a sequence number so stale responses can be
// dropped by the caller.

export type Pair = [string, string]; // [re, im] as decimal strings

export interface SolutionEntry {
  u: Pair[]; // 5 leading coefficients, the sixth is 1
  real: boolean;
  residual: string;
  multiplicity: number;
  class?: string;
  roundness?: string;
  condition?: string;
  tangency_points?: [Pair, Pair][];
}

export interface SolveResponse {
  instance: { conics: string[][] };
  generic: boolean;
  count_complex: number;
  count_real: number;
  class_counts: Record<string, number>;
  roundest_index: number | null;
  best_conditioned_index: number | null;
  warnings: string[];
  solutions: SolutionEntry[];
  instance_id?: string;
  certification?: Record<string, unknown>;
}

export interface FieldErrorBody {
  detail: string;
  field?: number[];
}

export interface InstanceDoc {
  conics: string[][];
}

export type SolveOutcome =
  | { kind: "ok"; seq: number; body: SolveResponse }
  | { kind: "error"; seq: number; status: number; body: FieldErrorBody };

let sequence = 0;

export function nextSequence(): number {
  sequence += 1;
  return sequence;
}

export function latestSequence(): number {
  return sequence;
}

export async function postSolve(conics: string[][]): Promise<SolveOutcome> {
  const seq = nextSequence();
  const resp = await fetch("/api/solve", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ conics, options: { include_tangency_points: true } }),
  });
  const body = await resp.json();
  if (!resp.ok) {
    return { kind: "error", seq, status: resp.status, body: body as FieldErrorBody };
  }
  return { kind: "ok", seq, body: body as SolveResponse };
}

export async function fetchInstance(which: "fulton" | "random"): Promise<InstanceDoc> {
  const resp = await fetch(`/api/instances/${which}`);
  if (!resp.ok) throw new Error(`instance fetch failed: ${resp.status}`);
  return (await resp.json()) as InstanceDoc;
}
