import { describe, expect, it } from "vitest";

import { ApiClient, type FetchLike } from "../src/api";

function fakeFetch(routes: Record<string, (init?: RequestInit) => unknown>): FetchLike {
  return async (url, init) => {
    const key = url.toString();
    if (!(key in routes)) {
      return new Response(JSON.stringify({ detail: "not found" }), { status: 404 });
    }
    const body = routes[key](init);
    return new Response(JSON.stringify(body), { status: 200 });
  };
}

describe("ApiClient", () => {
  it("submits selections as JSON and unwraps responses", async () => {
    let seen: unknown = null;
    const api = new ApiClient(
      "",
      fakeFetch({
        "/models/m1/selection": (init) => {
          seen = JSON.parse(init!.body as string);
          return { selection_id: "s1" };
        },
      }),
    );
    const res = await api.submitSelection("m1", {
      mode: "single-wire",
      touchpoints: [],
      wiring_points: [],
    });
    expect(res.selection_id).toBe("s1");
    expect((seen as { mode: string }).mode).toBe("single-wire");
  });

  it("raises structured errors from the server", async () => {
    const api = new ApiClient("", async () =>
      new Response(JSON.stringify({ error: "duplicate ids" }), { status: 422 }),
    );
    await expect(api.fetchMesh("x")).rejects.toThrow(/duplicate ids/);
  });

  it("polls runs to a terminal state", async () => {
    const states = ["queued", "running", "running", "done"];
    let calls = 0;
    const api = new ApiClient(
      "",
      fakeFetch({
        "/runs/r9": () => ({
          run_id: "r9",
          state: states[Math.min(calls++, states.length - 1)],
          stage: "",
          error: "",
          position: 0,
        }),
      }),
    );
    const final = await api.waitForRun("r9", { sleep: async () => {}, intervalMs: 0 });
    expect(final.state).toBe("done");
    expect(calls).toBe(4);
  });

  it("gives up after maxPolls", async () => {
    const api = new ApiClient(
      "",
      fakeFetch({
        "/runs/rx": () => ({ run_id: "rx", state: "running", stage: "", error: "", position: 0 }),
      }),
    );
    await expect(
      api.waitForRun("rx", { sleep: async () => {}, maxPolls: 3 }),
    ).rejects.toThrow(/still running/);
  });
});
