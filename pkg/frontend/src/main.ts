/**
 * Browser entry point. Wires the scene form, the timeline scrubber, the
 * particle canvas, the energy sparkline, and the consistency badge to a
 * PlaybackClient. Serve the backend with `revint serve` and open
 * index.html from any static file server.
 */

import { PlaybackClient } from "./protocol.js";
import { PlaybackViewModel } from "./viewmodel.js";
import { drawScene, drawEnergySparkline, Context2D } from "./render.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

function refresh(
  vm: PlaybackViewModel,
  sceneCtx: Context2D,
  sparkCtx: Context2D,
  canvas: HTMLCanvasElement,
  spark: HTMLCanvasElement
): void {
  byId<HTMLSpanElement>("step").textContent = String(vm.step);
  byId<HTMLSpanElement>("digest").textContent = vm.digest.slice(0, 16);
  byId<HTMLSpanElement>("energy").textContent = vm.energy.toPrecision(6);
  const badge = byId<HTMLSpanElement>("badge");
  badge.textContent = vm.badge;
  badge.className = `badge badge-${vm.badge}`;
  if (vm.meta) {
    drawScene(sceneCtx, canvas.width, canvas.height, {
      n: vm.meta.n,
      d: vm.meta.d,
      positions: vm.positions,
      fieldType: vm.meta.fieldType,
    });
  }
  drawEnergySparkline(sparkCtx, spark.width, spark.height, vm.energyTrace);
}

function start(): void {
  const canvas = byId<HTMLCanvasElement>("scene-canvas");
  const spark = byId<HTMLCanvasElement>("energy-canvas");
  const sceneCtx = canvas.getContext("2d") as unknown as Context2D;
  const sparkCtx = spark.getContext("2d") as unknown as Context2D;
  const slider = byId<HTMLInputElement>("scrub");
  const status = byId<HTMLSpanElement>("status");

  let vm: PlaybackViewModel | null = null;

  byId<HTMLButtonElement>("connect").addEventListener("click", async () => {
    const url = byId<HTMLInputElement>("server-url").value;
    let scene: unknown;
    try {
      scene = JSON.parse(byId<HTMLTextAreaElement>("scene-json").value);
    } catch {
      status.textContent = "scene is not valid JSON";
      return;
    }
    try {
      const client = new PlaybackClient(url);
      vm = new PlaybackViewModel(client);
      await vm.load(scene);
      status.textContent = `session on ${vm.meta?.name ?? "scene"}`;
      slider.value = "0";
      refresh(vm, sceneCtx, sparkCtx, canvas, spark);
    } catch (err) {
      status.textContent = String(err);
      vm = null;
    }
  });

  slider.addEventListener("input", async () => {
    if (!vm) {
      return;
    }
    try {
      await vm.seek(Number(slider.value));
      refresh(vm, sceneCtx, sparkCtx, canvas, spark);
    } catch (err) {
      status.textContent = String(err);
    }
  });
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", start);
}
