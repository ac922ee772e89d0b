// Cell validation for the coefficient grid.  The service accepts "p/q"
// and decimal literals; the grid works with real conics only, so complex
// entries are flagged here instead of being bounced by the server.

export interface CellValue {
  ok: boolean;
  value: number; // float image for rendering; NaN when not ok
  reason?: string;
}

const DECIMAL = /^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$/;
const INT = /^[+-]?\d+$/;

export function parseCell(text: string): CellValue {
  const s = text.trim();
  if (s === "") return { ok: false, value: NaN, reason: "empty" };
  if (s.includes("/")) {
    const [num, den, ...rest] = s.split("/");
    if (rest.length > 0) return { ok: false, value: NaN, reason: "too many slashes" };
    if (!INT.test(num.trim()) || !INT.test(den.trim())) {
      return { ok: false, value: NaN, reason: "fraction needs integer parts" };
    }
    const d = Number(den.trim());
    if (d === 0) return { ok: false, value: NaN, reason: "zero denominator" };
    return { ok: true, value: Number(num.trim()) / d };
  }
  if (!DECIMAL.test(s)) return { ok: false, value: NaN, reason: "not a number" };
  return { ok: true, value: Number(s) };
}

export function parseGrid(cells: string[][]): { ok: boolean; values: number[][] } {
  let ok = true;
  const values = cells.map((row) =>
    row.map((cell) => {
      const parsed = parseCell(cell);
      if (!parsed.ok) ok = false;
      return parsed.value;
    }),
  );
  return { ok, values };
}
