import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { fetchStub } from "./helpers.js";

describe("ApiClient", () => {
  it("sends the session token header and parses JSON replies", async () => {
    const { fetchFn, requests } = fetchStub([
      { status: 200, body: { session_id: "s1", stage: "individual" } },
    ]);
    const api = new ApiClient("http://svc", fetchFn);
    const descriptor = await api.descriptor("s1", "tok-123");
    expect(descriptor.session_id).toBe("s1");
    expect(requests[0]?.url).toBe("http://svc/sessions/s1");
    expect(requests[0]?.headers["X-Session-Token"]).toBe("tok-123");
  });

  it("returns null for a 204 next-item reply", async () => {
    const { fetchFn, requests } = fetchStub([{ status: 204 }]);
    const api = new ApiClient("", fetchFn);
    const item = await api.nextItem("s1", "tok", "bob");
    expect(item).toBeNull();
    expect(requests[0]?.url).toBe("/sessions/s1/next?participant_id=bob");
  });

  it("throws ApiError carrying the server detail verbatim", async () => {
    const { fetchFn } = fetchStub([
      { status: 409, body: { detail: "'bob' already rated point 'p1'" } },
    ]);
    const api = new ApiClient("", fetchFn);
    const error = await api
      .submitRating("s1", "tok", {
        participant_id: "bob",
        point_id: "p1",
        stage: "individual",
        values: { inclusivity: 1, aesthetics: 1, practicality: 1, accessibility: 1 },
      })
      .then(
        () => null,
        (e: unknown) => e,
      );
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(409);
    expect((error as ApiError).detail).toBe("'bob' already rated point 'p1'");
  });

  it("falls back to the status text when the error body is not JSON", async () => {
    const fetchFn = async () =>
      new Response("<html>boom</html>", { status: 502, statusText: "Bad Gateway" });
    const api = new ApiClient("", fetchFn);
    const error = await api.scale().then(
      () => null,
      (e: unknown) => e,
    );
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).detail).toBe("Bad Gateway");
  });

  it("posts rating bodies unchanged", async () => {
    const { fetchFn, requests } = fetchStub([{ status: 201, body: { recorded: 4 } }]);
    const api = new ApiClient("", fetchFn);
    const body = {
      participant_id: "bob",
      point_id: "p2",
      stage: "individual" as const,
      values: { inclusivity: 3, aesthetics: 2, practicality: 4, accessibility: 1 },
    };
    await api.submitRating("s1", "tok", body);
    expect(requests[0]?.method).toBe("POST");
    expect(requests[0]?.body).toEqual(body);
  });
});
