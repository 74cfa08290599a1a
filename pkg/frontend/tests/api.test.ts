import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, NetworkError, NoModelError } from "../src/api";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("lists clips from GET /clips", async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse([{ clip_id: "a", duration_s: 1.5, fps: 20 }]),
    );
    vi.stubGlobal("fetch", fetchMock);
    const clips = await new ApiClient("http://x").listClips();
    expect(fetchMock).toHaveBeenCalledWith("http://x/clips", undefined);
    expect(clips[0].clip_id).toBe("a");
  });

  it("passes the frame window as from/to query params", async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse({ clip_id: "a", fps: 20, coord: "local", frames: [] }),
    );
    vi.stubGlobal("fetch", fetchMock);
    await new ApiClient().getFrames("a", 0.5, 1.25);
    expect(fetchMock).toHaveBeenCalledWith("/clips/a/frames?from=0.5&to=1.25", undefined);
  });

  it("posts annotations as JSON and returns the id", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ id: 7 }));
    vi.stubGlobal("fetch", fetchMock);
    const record = { video_id: "a", start_s: 0.25, end_s: 1.75, instruction: "tuck" };
    const { id } = await new ApiClient().postAnnotation(record);
    expect(id).toBe(7);
    const [, init] = fetchMock.mock.calls[0];
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body)).toEqual(record);
  });

  it("maps 400 field diagnostics to ApiError.fieldErrors", async () => {
    const detail = [{ field: "end_s", message: "start must precede end" }];
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(jsonResponse({ detail }, 400)));
    const err = await new ApiClient()
      .postAnnotation({ video_id: "a", start_s: 2, end_s: 1, instruction: "x" })
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.fieldErrors).toEqual(detail);
  });

  it("maps the no-model 503 to NoModelError, distinct from network failure", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(jsonResponse({ detail: "no model loaded" }, 503)),
    );
    const noModel = await new ApiClient().generate("a", 0, 1).catch((e) => e);
    expect(noModel).toBeInstanceOf(NoModelError);

    vi.stubGlobal("fetch", vi.fn().mockRejectedValue(new TypeError("fetch failed")));
    const down = await new ApiClient().generate("a", 0, 1).catch((e) => e);
    expect(down).toBeInstanceOf(NetworkError);
    expect(down).not.toBeInstanceOf(NoModelError);
  });
});
