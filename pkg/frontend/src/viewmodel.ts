/**
 * Presentation state for the playback UI.
 *
 * Tracks the current step, particle positions, an energy trace over visited
 * steps, and a consistency badge. The badge is computed client side: the
 * first digest seen for each step is remembered, and any revisit either
 * confirms it (green) or exposes a mismatch (red). Digests stay opaque
 * strings throughout; the only operation applied to them is string
 * equality.
 */

import { PlaybackClient, StateSummary, Frame } from "./protocol.js";

export type BadgeState = "fresh" | "match" | "mismatch";

export interface TimelineExtent {
  min: number;
  max: number;
}

export class PlaybackViewModel {
  step = 0;
  digest = "";
  positions: number[] = [];
  momenta: number[] = [];
  energy = 0;
  badge: BadgeState = "fresh";
  meta: { name: string; n: number; d: number; fieldType: string } | null =
    null;

  private firstSeen = new Map<number, string>();
  private energyByStep = new Map<number, number>();
  private extentMin = 0;
  private extentMax = 0;

  constructor(private client: PlaybackClient) {}

  async load(scene: unknown): Promise<void> {
    const info = await this.client.createSession(scene);
    this.firstSeen.clear();
    this.energyByStep.clear();
    this.extentMin = info.step;
    this.extentMax = info.step;
    this.absorb(info);
    const frame: Frame = await this.client.frame();
    this.meta = {
      name: frame.name,
      n: frame.n,
      d: frame.d,
      fieldType: frame.field_type,
    };
  }

  async seek(step: number): Promise<void> {
    this.absorb(await this.client.seek(step));
  }

  get extent(): TimelineExtent {
    return { min: this.extentMin, max: this.extentMax };
  }

  /** Visited (step, energy) pairs in step order, for the sparkline. */
  get energyTrace(): Array<[number, number]> {
    return [...this.energyByStep.entries()].sort((a, b) => a[0] - b[0]);
  }

  private absorb(summary: StateSummary): void {
    this.step = summary.step;
    this.digest = summary.digest;
    this.positions = summary.q;
    this.momenta = summary.p;
    this.energy = summary.H;
    this.energyByStep.set(summary.step, summary.H);
    this.extentMin = Math.min(this.extentMin, summary.step);
    this.extentMax = Math.max(this.extentMax, summary.step);
    const known = this.firstSeen.get(summary.step);
    if (known === undefined) {
      this.firstSeen.set(summary.step, summary.digest);
      this.badge = "fresh";
    } else {
      this.badge = known === summary.digest ? "match" : "mismatch";
    }
  }
}
