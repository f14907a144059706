import { describe, expect, it } from "vitest";

import {
  PlaybackClient,
  ProtocolError,
  SocketLike,
} from "../src/protocol.js";

class FakeSocket implements SocketLike {
  sent: any[] = [];
  onmessage: ((ev: { data: string }) => void) | null = null;
  onclose: ((ev: unknown) => void) | null = null;
  closed = false;

  send(data: string): void {
    this.sent.push(JSON.parse(data));
  }

  close(): void {
    this.closed = true;
    this.onclose?.({});
  }

  reply(obj: unknown): void {
    this.onmessage?.({ data: JSON.stringify(obj) });
  }
}

function summary(step: number, digest = `sig:${step}`) {
  return { ok: true, step, digest, q: [Math.cos(step)], p: [0], H: 0.5 };
}

function connect(): { client: PlaybackClient; socket: FakeSocket } {
  const socket = new FakeSocket();
  const client = new PlaybackClient("ws://test/ws", () => socket);
  return { client, socket };
}

async function createSession(client: PlaybackClient, socket: FakeSocket) {
  const pending = client.createSession({ name: "s" });
  socket.reply({ ...summary(0), id: "sess-1" });
  return pending;
}

describe("PlaybackClient.createSession", () => {
  it("sends the scene and remembers the session id", async () => {
    const { client, socket } = connect();
    const info = await createSession(client, socket);
    expect(socket.sent).toEqual([{ op: "create", scene: { name: "s" } }]);
    expect(info.id).toBe("sess-1");
    expect(client.session).toBe("sess-1");
  });

  it("rejects with the server error code", async () => {
    const { client, socket } = connect();
    const pending = client.createSession({ bad: true });
    socket.reply({ ok: false, code: "bad_scene", msg: "no n" });
    await expect(pending).rejects.toThrowError(ProtocolError);
    const retry = client.createSession({ bad: true });
    socket.reply({ ok: false, code: "bad_scene", msg: "no n" });
    await expect(retry).rejects.toHaveProperty("code", "bad_scene");
  });
});

describe("PlaybackClient.seek coalescing", () => {
  it("keeps at most one seek in flight and jumps to the newest target", async () => {
    const { client, socket } = connect();
    await createSession(client, socket);

    const p1 = client.seek(10);
    const p2 = client.seek(20);
    const p3 = client.seek(30);
    // only the first request has gone out; 20 was overwritten by 30
    expect(socket.sent.filter((m) => m.op === "seek")).toEqual([
      { op: "seek", id: "sess-1", step: 10 },
    ]);

    socket.reply(summary(10));
    await Promise.resolve();
    expect(socket.sent.filter((m) => m.op === "seek")).toEqual([
      { op: "seek", id: "sess-1", step: 10 },
      { op: "seek", id: "sess-1", step: 30 },
    ]);

    socket.reply(summary(30));
    const results = await Promise.all([p1, p2, p3]);
    for (const r of results) {
      expect(r.step).toBe(30);
      expect(r.digest).toBe("sig:30");
    }
  });

  it("does not send a request when already at the target step", async () => {
    const { client, socket } = connect();
    await createSession(client, socket);
    const p = client.seek(7);
    socket.reply(summary(7));
    await p;
    const before = socket.sent.length;
    const again = await client.seek(7);
    expect(socket.sent.length).toBe(before);
    expect(again.step).toBe(7);
  });

  it("rejects seeks before a session exists", async () => {
    const { client } = connect();
    await expect(client.seek(1)).rejects.toThrow("no session");
  });
});

describe("PlaybackClient.frame", () => {
  it("returns scene metadata for rendering", async () => {
    const { client, socket } = connect();
    await createSession(client, socket);
    const pending = client.frame();
    socket.reply({
      ...summary(0),
      name: "unit spring",
      n: 1,
      d: 1,
      field_type: "spring",
    });
    const frame = await pending;
    expect(frame.field_type).toBe("spring");
    expect(socket.sent.at(-1)).toEqual({ op: "frame", id: "sess-1" });
  });
});

describe("connection loss", () => {
  it("rejects outstanding requests when the socket closes", async () => {
    const { client, socket } = connect();
    await createSession(client, socket);
    const pending = client.seek(5);
    socket.close();
    await expect(pending).rejects.toThrow("connection closed");
  });
});
