/**
 * Wire protocol client for the playback service.
 *
 * The server answers requests in order over a single WebSocket, so the
 * client keeps a FIFO of pending resolvers. Seeks are coalesced: while one
 * seek is in flight, later seek calls only update the desired target, and a
 * single follow-up seek is issued once the reply lands. Scrubbing a slider
 * therefore costs at most one outstanding request at a time.
 *
 * Digests and hex words are opaque strings on this side of the wire. The
 * client never parses or recomputes them; equality comparison is the only
 * permitted operation.
 */

import { z } from "zod";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

const okBase = z.object({
  ok: z.literal(true),
  step: z.number().int(),
  digest: z.string(),
  q: z.array(z.number()),
  p: z.array(z.number()),
  H: z.number(),
});

const createReply = okBase.extend({ id: z.string() });

const frameReply = okBase.extend({
  name: z.string(),
  n: z.number().int(),
  d: z.number().int(),
  field_type: z.string(),
});

const errorReply = z.object({
  ok: z.literal(false),
  code: z.string(),
  msg: z.string(),
});

export type StateSummary = z.infer<typeof okBase>;
export type SessionInfo = z.infer<typeof createReply>;
export type Frame = z.infer<typeof frameReply>;

export class ProtocolError extends Error {
  constructor(public readonly code: string, msg: string) {
    super(`${code}: ${msg}`);
    this.name = "ProtocolError";
  }
}

interface Pending {
  resolve: (raw: unknown) => void;
  reject: (err: Error) => void;
}

export class PlaybackClient {
  private socket: SocketLike;
  private pending: Pending[] = [];
  private sessionId: string | null = null;
  private seekInFlight = false;
  private wantedStep: number | null = null;
  private lastIssuedStep: number | null = null;

  constructor(url: string, factory?: SocketFactory) {
    const make: SocketFactory =
      factory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.socket = make(url);
    this.socket.onmessage = (ev) => this.receive(ev.data);
    this.socket.onclose = () => this.failAll(new Error("connection closed"));
  }

  get session(): string | null {
    return this.sessionId;
  }

  close(): void {
    this.socket.close();
  }

  async createSession(scene: unknown): Promise<SessionInfo> {
    const raw = await this.request({ op: "create", scene });
    const info = createReply.parse(raw);
    this.sessionId = info.id;
    this.lastIssuedStep = info.step;
    this.lastSummary = info;
    return info;
  }

  /**
   * Request the given absolute step. Resolves with the summary for the
   * step that was actually reached last, which may be a later target if
   * further seeks were coalesced while this one was queued.
   */
  seek(step: number): Promise<StateSummary> {
    if (this.sessionId === null) {
      return Promise.reject(new Error("no session"));
    }
    this.wantedStep = step;
    if (!this.seekInFlight) {
      this.pumpSeek();
    }
    if (!this.seekInFlight) {
      // already at the requested step, nothing was sent
      return Promise.resolve(this.lastSummary as StateSummary);
    }
    return this.settled;
  }

  async frame(): Promise<Frame> {
    if (this.sessionId === null) {
      throw new Error("no session");
    }
    const raw = await this.request({ op: "frame", id: this.sessionId });
    return frameReply.parse(raw);
  }

  /** Resolves once no seek is in flight, with the latest summary. */
  private lastSummary: StateSummary | null = null;
  private settled: Promise<StateSummary> = Promise.resolve(
    null as unknown as StateSummary
  );
  private settle: ((s: StateSummary) => void) | null = null;
  private settleFail: ((e: Error) => void) | null = null;

  private pumpSeek(): void {
    const target = this.wantedStep;
    if (target === null || target === this.lastIssuedStep) {
      this.wantedStep = null;
      return;
    }
    if (this.settle === null) {
      this.settled = new Promise((resolve, reject) => {
        this.settle = resolve;
        this.settleFail = reject;
      });
    }
    this.seekInFlight = true;
    this.wantedStep = null;
    this.lastIssuedStep = target;
    this.request({ op: "seek", id: this.sessionId, step: target })
      .then((raw) => {
        const summary = okBase.parse(raw);
        this.lastSummary = summary;
        this.seekInFlight = false;
        if (this.wantedStep !== null && this.wantedStep !== target) {
          this.pumpSeek();
        } else {
          this.wantedStep = null;
          const done = this.settle;
          this.settle = null;
          this.settleFail = null;
          done?.(summary);
        }
      })
      .catch((err) => {
        this.seekInFlight = false;
        this.wantedStep = null;
        const fail = this.settleFail;
        this.settle = null;
        this.settleFail = null;
        fail?.(err);
      });
  }

  private request(message: object): Promise<unknown> {
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.socket.send(JSON.stringify(message));
    });
  }

  private receive(data: string): void {
    const waiter = this.pending.shift();
    if (!waiter) {
      return; // unsolicited message; the protocol never sends these
    }
    let raw: unknown;
    try {
      raw = JSON.parse(data);
    } catch {
      waiter.reject(new Error("malformed server message"));
      return;
    }
    const asError = errorReply.safeParse(raw);
    if (asError.success) {
      waiter.reject(new ProtocolError(asError.data.code, asError.data.msg));
      return;
    }
    waiter.resolve(raw);
  }

  private failAll(err: Error): void {
    const waiting = this.pending;
    this.pending = [];
    for (const w of waiting) {
      w.reject(err);
    }
    this.settleFail?.(err);
    this.settle = null;
    this.settleFail = null;
  }
}
