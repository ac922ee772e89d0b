// Page-level tests against a mocked fetch: the service is never contacted.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { SolveResponse } from "../src/api";
import { init } from "../src/main";

const INSTANCE_CELLS = [
  ["1", "0", "1", "0", "0", "-1"],
  ["1", "0", "2", "1/2", "0", "-1"],
  ["2", "0", "1", "0", "0.25", "-1"],
  ["1", "0", "1", "-1", "0", "-1"],
  ["1", "0", "1", "0", "1", "-1"],
];

function solveFixture(): SolveResponse {
  return {
    instance: { conics: INSTANCE_CELLS },
    generic: true,
    count_complex: 3264,
    count_real: 32,
    class_counts: { Ellipse: 20, Hyperbola: 12 },
    roundest_index: 0,
    best_conditioned_index: 2,
    warnings: [],
    solutions: [
      {
        u: [["0.5", "0"], ["0", "0"], ["0.5", "0"], ["0", "0"], ["0", "0"]],
        real: true,
        residual: "1e-14",
        multiplicity: 1,
        class: "Ellipse",
        roundness: "0.9",
        tangency_points: [[["1.4", "0"], ["0", "0"]]],
      },
      {
        u: [["1", "0"], ["0", "0"], ["-1", "0"], ["0", "0"], ["0", "0"]],
        real: true,
        residual: "2e-14",
        multiplicity: 1,
        class: "Hyperbola",
        roundness: "0.1",
        tangency_points: [[["2", "0"], ["1.7", "0"]]],
      },
      {
        u: [["1", "0.3"], ["0", "0"], ["1", "0"], ["0", "0"], ["0", "0"]],
        real: false,
        residual: "1e-13",
        multiplicity: 1,
        condition: "8.0",
      },
      {
        u: [["2", "0"], ["0", "0"], ["3", "0"], ["0", "0"], ["0", "0"]],
        real: true,
        residual: "3e-14",
        multiplicity: 1,
        class: "Ellipse",
        roundness: "0.7",
      },
    ],
  };
}

function okJson(body: unknown): Response {
  return {
    ok: true,
    status: 200,
    json: () => Promise.resolve(body),
  } as unknown as Response;
}

function errJson(status: number, body: unknown): Response {
  return {
    ok: false,
    status,
    json: () => Promise.resolve(body),
  } as unknown as Response;
}

function fillGrid(app: ReturnType<typeof init>, rows: string[][] = INSTANCE_CELLS): void {
  rows.forEach((row, i) => {
    row.forEach((val, j) => {
      const input = app.cells[i][j];
      input.value = val;
      input.dispatchEvent(new Event("input", { bubbles: true }));
    });
  });
}

// stop the auto-advance interval a finished solve leaves behind
function pauseApp(root: HTMLElement): void {
  (root.querySelector("#play") as HTMLButtonElement | null)?.click();
}

describe("ui", () => {
  let root: HTMLElement;

  beforeEach(() => {
    root = document.createElement("div");
    document.body.appendChild(root);
  });

  afterEach(() => {
    document.body.innerHTML = "";
    vi.unstubAllGlobals();
    vi.restoreAllMocks();
  });

  it("renders five blue conics, the banner counts, and a navigable red carousel", async () => {
    const fetchMock = vi.fn().mockResolvedValue(okJson(solveFixture()));
    vi.stubGlobal("fetch", fetchMock);
    const app = init(root);

    expect(app.compute.hasAttribute("disabled")).toBe(true);
    fillGrid(app);
    expect(app.compute.hasAttribute("disabled")).toBe(false);

    app.compute.click();
    await app.inFlight;

    // the five inputs are on the plot in input color, one group per conic
    const inputPieces = root.querySelectorAll("#plot .conic-input");
    const tags = new Set(Array.from(inputPieces).map((el) => el.getAttribute("data-conic")));
    expect(tags.size).toBe(5);

    // banner and tallies copy the response numbers verbatim
    expect(root.querySelector("#banner")?.textContent).toBe("3264 complex / 32 real");
    expect(root.querySelector("#tallies")?.textContent).toContain("20 ellipse");
    expect(root.querySelector("#tallies")?.textContent).toContain("12 hyperbola");

    // a red solution is drawn and the label marks the roundest
    expect(root.querySelectorAll("#plot .conic-solution").length).toBeGreaterThan(0);
    const label = () => root.querySelector("#carousel-label")?.textContent ?? "";
    expect(label()).toContain("1 / 3");
    expect(label()).toContain("roundest");

    // navigation walks the real solutions and wraps
    const next = root.querySelector("#next") as HTMLButtonElement;
    const seen = [label()];
    next.click();
    seen.push(label());
    next.click();
    seen.push(label());
    next.click();
    expect(label()).toBe(seen[0]); // wrapped around three reals
    expect(seen[1]).toContain("2 / 3");
    expect(seen[1]).toContain("hyperbola");

    // exactly one POST went out, to the solve endpoint
    expect(fetchMock).toHaveBeenCalledTimes(1);
    expect(fetchMock.mock.calls[0][0]).toBe("/api/solve");
    const sent = JSON.parse((fetchMock.mock.calls[0][1] as RequestInit).body as string);
    expect(sent.conics).toEqual(INSTANCE_CELLS);
    pauseApp(root);
  });

  it("disables compute while any cell is malformed and highlights it", () => {
    const fetchMock = vi.fn();
    vi.stubGlobal("fetch", fetchMock);
    const app = init(root);
    fillGrid(app);
    expect(app.compute.hasAttribute("disabled")).toBe(false);

    const cell = app.cells[2][4];
    cell.value = "1/0";
    cell.dispatchEvent(new Event("input", { bubbles: true }));
    expect(app.compute.hasAttribute("disabled")).toBe(true);
    expect(cell.classList.contains("invalid")).toBe(true);

    app.compute.click(); // disabled buttons do not fire
    expect(fetchMock).not.toHaveBeenCalled();

    cell.value = "1/4";
    cell.dispatchEvent(new Event("input", { bubbles: true }));
    expect(cell.classList.contains("invalid")).toBe(false);
    expect(app.compute.hasAttribute("disabled")).toBe(false);
  });

  it("shows every number from the response without recomputing anything", async () => {
    // counts deliberately inconsistent with the solution list: the page
    // must echo them anyway, proving it does no arithmetic of its own
    const fixture = solveFixture();
    fixture.count_real = 7;
    fixture.class_counts = { Ellipse: 99 };
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(okJson(fixture)));
    const app = init(root);
    fillGrid(app);
    app.compute.click();
    await app.inFlight;
    expect(root.querySelector("#banner")?.textContent).toBe("3264 complex / 7 real");
    expect(root.querySelector("#tallies")?.textContent).toBe("99 ellipse");
    pauseApp(root);
  });

  it("surfaces a 400 with the offending cell highlighted", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(errJson(400, { detail: "coefficient (2,5) is malformed", field: [1, 4] })),
    );
    const app = init(root);
    fillGrid(app);
    app.compute.click();
    await app.inFlight;
    expect(root.querySelector("#error")?.textContent).toContain("malformed");
    expect(app.cells[1][4].classList.contains("invalid")).toBe(true);
    // the loop continues: compute is armed again
    expect(app.compute.hasAttribute("disabled")).toBe(false);
  });

  it("drops a stale response when a newer compute superseded it", async () => {
    let release!: (r: Response) => void;
    const first = new Promise<Response>((resolve) => {
      release = resolve;
    });
    const second = solveFixture();
    second.count_complex = 3264;
    second.count_real = 2;
    const fetchMock = vi
      .fn()
      .mockReturnValueOnce(first)
      .mockResolvedValueOnce(okJson(second));
    vi.stubGlobal("fetch", fetchMock);
    const app = init(root);
    fillGrid(app);
    app.compute.click();
    const firstFlight = app.inFlight;

    // user edits and recomputes before the first answer lands
    const cell = app.cells[0][0];
    cell.value = "2";
    cell.dispatchEvent(new Event("input", { bubbles: true }));
    app.compute.click();
    await app.inFlight;
    expect(root.querySelector("#banner")?.textContent).toBe("3264 complex / 2 real");

    const stale = solveFixture();
    stale.count_real = 999;
    release(okJson(stale));
    await firstFlight;
    // still the fresh numbers
    expect(root.querySelector("#banner")?.textContent).toBe("3264 complex / 2 real");
    pauseApp(root);
  });

  it("loads a preset from the instance endpoint and enables compute", async () => {
    const fetchMock = vi.fn().mockResolvedValue(okJson({ conics: INSTANCE_CELLS }));
    vi.stubGlobal("fetch", fetchMock);
    const app = init(root);
    const preset = root.querySelector("#preset") as HTMLSelectElement;
    preset.value = "fulton";
    preset.dispatchEvent(new Event("change", { bubbles: true }));
    await new Promise((r) => setTimeout(r, 0));
    expect(fetchMock.mock.calls[0][0]).toBe("/api/instances/fulton");
    expect(app.cells[0][0].value).toBe("1");
    expect(app.cells[1][3].value).toBe("1/2");
    expect(app.compute.hasAttribute("disabled")).toBe(false);
  });

  it("auto-advances the carousel and pauses on demand", async () => {
    vi.useFakeTimers();
    try {
      vi.stubGlobal("fetch", vi.fn().mockResolvedValue(okJson(solveFixture())));
      const app = init(root);
      fillGrid(app);
      app.compute.click();
      await app.inFlight;
      const label = () => root.querySelector("#carousel-label")?.textContent ?? "";
      expect(label()).toContain("1 / 3");
      vi.advanceTimersByTime(1500);
      expect(label()).toContain("2 / 3");
      vi.advanceTimersByTime(1500);
      expect(label()).toContain("3 / 3");
      (root.querySelector("#play") as HTMLButtonElement).click();
      vi.advanceTimersByTime(10 * 1500);
      expect(label()).toContain("3 / 3"); // paused: no more motion
    } finally {
      vi.useRealTimers();
    }
  });

  it("filters the carousel by class and marks tangency points on request", async () => {
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(okJson(solveFixture())));
    const app = init(root);
    fillGrid(app);
    app.compute.click();
    await app.inFlight;

    const filter = root.querySelector("#filter") as HTMLSelectElement;
    filter.value = "Hyperbola";
    filter.dispatchEvent(new Event("change", { bubbles: true }));
    const label = root.querySelector("#carousel-label")?.textContent ?? "";
    expect(label).toContain("1 / 1");
    expect(label).toContain("hyperbola");

    filter.value = "all";
    filter.dispatchEvent(new Event("change", { bubbles: true }));
    expect(root.querySelectorAll("#plot .tangency-point").length).toBe(0);
    const toggle = root.querySelector("#show-tangency") as HTMLInputElement;
    toggle.checked = true;
    toggle.dispatchEvent(new Event("change", { bubbles: true }));
    expect(root.querySelectorAll("#plot .tangency-point").length).toBe(1);
    pauseApp(root);
  });
});
