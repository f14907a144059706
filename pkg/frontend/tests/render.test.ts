import { describe, expect, it } from "vitest";

import { Context2D, drawEnergySparkline, drawScene } from "../src/render.js";

/** Records every draw call so tests can assert on the command stream. */
class RecordingContext implements Context2D {
  fillStyle = "";
  strokeStyle = "";
  lineWidth = 0;
  calls: Array<[string, ...number[]]> = [];

  clearRect(x: number, y: number, w: number, h: number): void {
    this.calls.push(["clearRect", x, y, w, h]);
  }
  beginPath(): void {
    this.calls.push(["beginPath"]);
  }
  arc(x: number, y: number, r: number): void {
    this.calls.push(["arc", x, y, r]);
  }
  moveTo(x: number, y: number): void {
    this.calls.push(["moveTo", x, y]);
  }
  lineTo(x: number, y: number): void {
    this.calls.push(["lineTo", x, y]);
  }
  fill(): void {
    this.calls.push(["fill"]);
  }
  stroke(): void {
    this.calls.push(["stroke"]);
  }

  count(name: string): number {
    return this.calls.filter(([op]) => op === name).length;
  }
}

describe("drawScene", () => {
  it("clears and draws one filled circle per particle", () => {
    const ctx = new RecordingContext();
    drawScene(ctx, 640, 400, {
      n: 3,
      d: 2,
      positions: [0, 0, 0.5, 0.5, -0.5, 0.25],
      fieldType: "gravity",
    });
    expect(ctx.calls[0][0]).toBe("clearRect");
    expect(ctx.count("arc")).toBe(3);
    expect(ctx.count("fill")).toBe(3);
    expect(ctx.count("lineTo")).toBe(0);
  });

  it("draws chain bonds from the anchor through every particle", () => {
    const ctx = new RecordingContext();
    drawScene(ctx, 640, 400, {
      n: 4,
      d: 2,
      positions: [0, -0.2, 0, -0.4, 0, -0.6, 0, -0.8],
      fieldType: "chain",
    });
    // one polyline: moveTo at the anchor then a lineTo per particle
    expect(ctx.count("moveTo")).toBe(1);
    expect(ctx.count("lineTo")).toBe(4);
    expect(ctx.count("stroke")).toBe(1);
    expect(ctx.count("arc")).toBe(4);
  });

  it("marks keyframe targets with crosses", () => {
    const ctx = new RecordingContext();
    drawScene(ctx, 640, 400, {
      n: 2,
      d: 2,
      positions: [0, 0, 1, 1],
      fieldType: "gravity",
      targets: [0.5, 0.5, -0.5, -0.5],
    });
    // two diagonal strokes per target cross
    expect(ctx.count("moveTo")).toBe(4);
    expect(ctx.count("lineTo")).toBe(4);
  });

  it("maps 1d positions onto the horizontal axis at mid height", () => {
    const ctx = new RecordingContext();
    drawScene(ctx, 640, 400, {
      n: 1,
      d: 1,
      positions: [0],
      fieldType: "spring",
    });
    const arc = ctx.calls.find(([op]) => op === "arc");
    expect(arc?.[1]).toBe(320);
    expect(arc?.[2]).toBe(200);
  });
});

describe("drawEnergySparkline", () => {
  it("draws a polyline through the trace", () => {
    const ctx = new RecordingContext();
    drawEnergySparkline(ctx, 640, 80, [
      [0, 0.5],
      [10, 0.51],
      [20, 0.49],
    ]);
    expect(ctx.count("moveTo")).toBe(1);
    expect(ctx.count("lineTo")).toBe(2);
    expect(ctx.count("stroke")).toBe(1);
  });

  it("only clears when fewer than two samples exist", () => {
    const ctx = new RecordingContext();
    drawEnergySparkline(ctx, 640, 80, [[0, 0.5]]);
    expect(ctx.calls).toEqual([["clearRect", 0, 0, 640, 80]]);
  });
});
