import { describe, expect, it, vi } from "vitest";

import { isDashboard, StoryloomClient } from "../src/api";

function fakeFetch(
  status: number,
  body: unknown,
): [typeof fetch, ReturnType<typeof vi.fn>] {
  const impl = vi.fn(async () => {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  });
  return [impl as unknown as typeof fetch, impl];
}

describe("StoryloomClient", () => {
  it("hits the expected route for appends and passes the body", async () => {
    const [impl, spy] = fakeFetch(200, { sentence_id: "s1" });
    const client = new StoryloomClient("http://x", impl);
    await client.appendSentence("abc", "Porto is cheap.", "fallback");
    expect(spy).toHaveBeenCalledOnce();
    const [url, init] = spy.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("http://x/sessions/abc/sentences?mode=fallback");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body as string)).toEqual({
      content: "Porto is cheap.",
    });
  });

  it("surfaces engine error codes and violations", async () => {
    const [impl] = fakeFetch(422, {
      code: "StoryValidationFailed",
      message: "story rejected",
      violations: ["OpenerViolation: bad opener"],
    });
    const client = new StoryloomClient("http://x", impl);
    await expect(client.story("abc")).rejects.toMatchObject({
      status: 422,
      code: "StoryValidationFailed",
      violations: ["OpenerViolation: bad opener"],
    });
  });

  it("falls back to an HTTP code when the error body is not JSON", async () => {
    const impl = vi.fn(
      async () => new Response("boom", { status: 500 }),
    ) as unknown as typeof fetch;
    const client = new StoryloomClient("http://x", impl);
    await expect(client.timeline("abc")).rejects.toMatchObject({
      code: "HTTP500",
      status: 500,
    });
  });

  it("builds query strings for inquiry filters", async () => {
    const [impl, spy] = fakeFetch(200, { open: [] });
    const client = new StoryloomClient("http://x", impl);
    await client.inquiry("abc", "open");
    expect((spy.mock.calls[0] as [string])[0]).toBe(
      "http://x/sessions/abc/inquiry?status=open",
    );
  });

  it("distinguishes single charts from dashboards", () => {
    expect(
      isDashboard({
        dashboard_id: "d1",
        views: [],
        layout: { rows: 1, cols: 1, cells: [] },
      }),
    ).toBe(true);
    expect(
      isDashboard({
        view_id: "v1",
        title: "t",
        caption: "c",
        chart_kind: "bar",
        grammar_spec: { mark: "bar", data: { values: [] } },
      }),
    ).toBe(false);
  });
});
