/**
 * Canvas drawing. The context is injected through a minimal interface so
 * the functions render to a real CanvasRenderingContext2D in the browser
 * and to a recording stub in tests, with no DOM dependency.
 */

export interface Context2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  fill(): void;
  stroke(): void;
}

export interface SceneView {
  n: number;
  d: number;
  positions: number[];
  fieldType: string;
  targets?: number[];
}

const WORLD_HALF = 2.0; // world units mapped to the half-width of the canvas

function toPixel(
  x: number,
  y: number,
  width: number,
  height: number
): [number, number] {
  const scale = Math.min(width, height) / (2 * WORLD_HALF);
  return [width / 2 + x * scale, height / 2 - y * scale];
}

function particleXY(view: SceneView, i: number): [number, number] {
  const x = view.positions[i * view.d];
  const y = view.d > 1 ? view.positions[i * view.d + 1] : 0;
  return [x, y];
}

export function drawScene(
  ctx: Context2D,
  width: number,
  height: number,
  view: SceneView
): void {
  ctx.clearRect(0, 0, width, height);

  if (view.fieldType === "chain") {
    // bonds between consecutive particles, plus the anchor at the origin
    ctx.strokeStyle = "#888";
    ctx.lineWidth = 1;
    ctx.beginPath();
    let [px, py] = toPixel(0, 0, width, height);
    ctx.moveTo(px, py);
    for (let i = 0; i < view.n; i++) {
      [px, py] = toPixel(...particleXY(view, i), width, height);
      ctx.lineTo(px, py);
    }
    ctx.stroke();
  }

  if (view.targets) {
    ctx.strokeStyle = "#c33";
    ctx.lineWidth = 1;
    for (let i = 0; i < view.n; i++) {
      const tx = view.targets[i * view.d];
      const ty = view.d > 1 ? view.targets[i * view.d + 1] : 0;
      const [px, py] = toPixel(tx, ty, width, height);
      ctx.beginPath();
      ctx.moveTo(px - 4, py - 4);
      ctx.lineTo(px + 4, py + 4);
      ctx.moveTo(px - 4, py + 4);
      ctx.lineTo(px + 4, py - 4);
      ctx.stroke();
    }
  }

  ctx.fillStyle = "#1b6ac9";
  for (let i = 0; i < view.n; i++) {
    const [px, py] = toPixel(...particleXY(view, i), width, height);
    ctx.beginPath();
    ctx.arc(px, py, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
}

export function drawEnergySparkline(
  ctx: Context2D,
  width: number,
  height: number,
  trace: Array<[number, number]>
): void {
  ctx.clearRect(0, 0, width, height);
  if (trace.length < 2) {
    return;
  }
  const steps = trace.map((t) => t[0]);
  const values = trace.map((t) => t[1]);
  const sMin = Math.min(...steps);
  const sMax = Math.max(...steps);
  const vMin = Math.min(...values);
  const vMax = Math.max(...values);
  const sSpan = sMax - sMin || 1;
  const vSpan = vMax - vMin || 1;
  ctx.strokeStyle = "#2a9d4a";
  ctx.lineWidth = 1;
  ctx.beginPath();
  trace.forEach(([s, v], i) => {
    const x = ((s - sMin) / sSpan) * (width - 2) + 1;
    const y = height - 1 - ((v - vMin) / vSpan) * (height - 2);
    if (i === 0) {
      ctx.moveTo(x, y);
    } else {
      ctx.lineTo(x, y);
    }
  });
  ctx.stroke();
}
