import { afterEach, describe, expect, it, vi } from "vitest";

import type { EventPayload } from "../src/api";
import { type App, createApp } from "../src/app";

// Coordinates fan out so markers never share a cluster cell at the test zoom.
const evt = (id: number): EventPayload => ({
  event_id: id,
  pivot_id: `t${id}`,
  lat: 40.2 + id * 0.07,
  lon: -74.5 + id * 0.07,
  t_start: 1_700_000_000 + id,
  t_end: 1_700_001_800 + id,
  keywords: [`word${id}`, "shared"],
  score: 0.9,
  member_ids: [`t${id}`],
  detected_at: 1_700_001_800 + id,
});

const kEvents = (n: number): Response =>
  new Response(
    JSON.stringify({ count: n, events: Array.from({ length: n }, (_, i) => evt(i + 1)) }),
    { status: 200, headers: { "Content-Type": "application/json" } },
  );

interface Call {
  url: string;
  signal: AbortSignal | null;
}

function harness(handler: (url: string, idx: number, signal: AbortSignal | null) => Promise<Response> | Response) {
  const calls: Call[] = [];
  const fetchImpl = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const signal = init?.signal ?? null;
    calls.push({ url: String(input), signal });
    return handler(String(input), calls.length - 1, signal);
  }) as typeof fetch;
  return { calls, fetchImpl };
}

let app: App | null = null;
let root: HTMLElement;

function mount(fetchImpl: typeof fetch): App {
  root = document.createElement("div");
  document.body.appendChild(root);
  app = createApp(root, { fetchImpl, pollIntervalS: 0, zoom: 13 });
  return app;
}

const label = () => root.querySelector(".count-label")!.textContent;
const markers = () => root.querySelectorAll(".evt-marker").length;
const banner = () => root.querySelector<HTMLElement>(".banner")!;
const validation = () => root.querySelector<HTMLElement>(".validation")!;

afterEach(() => {
  app?.destroy();
  app = null;
  document.body.textContent = "";
  window.history.replaceState(null, "", "/");
  vi.restoreAllMocks();
});

describe("query results", () => {
  it("renders exactly K markers and the label 'K events'", async () => {
    const { calls, fetchImpl } = harness(() => kEvents(5));
    const a = mount(fetchImpl);
    // drive through the real form submit path
    const form = root.querySelector<HTMLFormElement>(".query-form")!;
    form.dispatchEvent(new Event("submit", { cancelable: true }));
    await vi.waitFor(() => expect(label()).toBe("5 events"));
    expect(markers()).toBe(5);
    expect(a.mapView.markerCount()).toBe(5);
    expect(calls.map((c) => c.url)).toEqual(["/events"]);
  });

  it("renders an empty layer and '0 events' for an empty match", async () => {
    const { fetchImpl } = harness((_url, idx) => (idx === 0 ? kEvents(4) : kEvents(0)));
    const a = mount(fetchImpl);
    await a.submit();
    expect(markers()).toBe(4);
    await a.submit();
    expect(markers()).toBe(0);
    expect(a.mapView.markerCount()).toBe(0);
    expect(label()).toBe("0 events");
  });
});

describe("client-side validation", () => {
  it("blocks an inverted span before any request is sent", async () => {
    const { calls, fetchImpl } = harness(() => kEvents(1));
    const a = mount(fetchImpl);
    const push = vi.spyOn(window.history, "pushState");
    a.setField("from", "2026-01-02T00:00");
    a.setField("to", "2026-01-01T00:00");
    await a.submit();
    expect(calls).toHaveLength(0);
    expect(push).not.toHaveBeenCalled();
    expect(validation().hidden).toBe(false);
    expect(validation().textContent).toContain("inverted");
    expect(label()).toBe("");
  });

  it("blocks a malformed date before any request is sent", async () => {
    const { calls, fetchImpl } = harness(() => kEvents(1));
    const a = mount(fetchImpl);
    a.setField("from", "2026-13-99T99:99");
    await a.submit();
    expect(calls).toHaveLength(0);
    expect(validation().textContent).toContain("from is not a valid date");
  });

  it("clears the validation message once the form is fixed", async () => {
    const { calls, fetchImpl } = harness(() => kEvents(1));
    const a = mount(fetchImpl);
    a.setField("from", "garbage");
    await a.submit();
    expect(validation().hidden).toBe(false);
    a.setField("from", "2026-01-01T00:00");
    await a.submit();
    expect(validation().hidden).toBe(true);
    expect(calls).toHaveLength(1);
  });
});

describe("query refinement", () => {
  it("resubmits the exact combined parameters after a refinement", async () => {
    const { calls, fetchImpl } = harness(() => kEvents(1));
    const a = mount(fetchImpl);
    const fromS = Math.floor(Date.parse("2026-01-01T06:00") / 1000);
    const toS = Math.floor(Date.parse("2026-01-01T12:00") / 1000);

    a.setField("from", "2026-01-01T06:00");
    a.setField("to", "2026-01-01T12:00");
    await a.submit();
    a.setField("keyword", "fire");
    await a.submit();
    await a.submit(); // identical resubmission

    expect(calls.map((c) => c.url)).toEqual([
      `/events?from=${fromS}&to=${toS}`,
      `/events?from=${fromS}&to=${toS}&keyword=fire`,
      `/events?from=${fromS}&to=${toS}&keyword=fire`,
    ]);
  });
});

describe("error handling", () => {
  it("keeps the previous marker set and shows a dismissible banner", async () => {
    const { fetchImpl } = harness((_url, idx) => {
      if (idx === 0) return kEvents(3);
      throw new TypeError("fetch failed");
    });
    const a = mount(fetchImpl);
    await a.submit();
    expect(markers()).toBe(3);

    await a.submit();
    expect(banner().hidden).toBe(false);
    expect(banner().textContent).toContain("query failed");
    expect(markers()).toBe(3);
    expect(label()).toBe("3 events");

    banner().querySelector<HTMLButtonElement>(".banner-dismiss")!.click();
    expect(banner().hidden).toBe(true);
    expect(markers()).toBe(3);
  });

  it("surfaces the HTTP status and detail from the service", async () => {
    const { fetchImpl } = harness(
      () =>
        new Response(JSON.stringify({ detail: "engine offline" }), {
          status: 500,
          headers: { "Content-Type": "application/json" },
        }),
    );
    const a = mount(fetchImpl);
    await a.submit();
    expect(banner().hidden).toBe(false);
    expect(banner().textContent).toContain("HTTP 500: engine offline");
    expect(markers()).toBe(0);
  });
});

describe("concurrency", () => {
  it("aborts the older in-flight query when a newer one is submitted", async () => {
    const { calls, fetchImpl } = harness((_url, idx, signal) => {
      if (idx === 0) {
        // never resolves on its own; only the abort settles it
        return new Promise<Response>((_resolve, reject) => {
          signal?.addEventListener("abort", () =>
            reject(new DOMException("aborted", "AbortError")),
          );
        });
      }
      return kEvents(2);
    });
    const a = mount(fetchImpl);
    const first = a.submit();
    expect(calls).toHaveLength(1);
    a.setField("keyword", "newer");
    const second = a.submit();
    await Promise.all([first, second]);

    expect(calls).toHaveLength(2);
    expect(calls[0]!.signal!.aborted).toBe(true);
    expect(markers()).toBe(2);
    expect(banner().hidden).toBe(true);
    expect(a.state().pending).toBe(false);
  });
});

describe("history", () => {
  it("records submitted queries and replays them on popstate", async () => {
    const { calls, fetchImpl } = harness((url) =>
      url.includes("keyword=fire") ? kEvents(2) : kEvents(6),
    );
    const a = mount(fetchImpl);
    const push = vi.spyOn(window.history, "pushState");

    a.setField("from", "2026-01-01T06:00");
    a.setField("to", "2026-01-01T12:00");
    await a.submit();
    expect(markers()).toBe(6);
    const search1 = window.location.search;
    expect(search1).toContain("from=");

    a.setField("keyword", "fire");
    await a.submit();
    expect(markers()).toBe(2);
    expect(window.location.search).toContain("kw=fire");
    expect(push).toHaveBeenCalledTimes(2);

    // back to the first entry
    window.history.replaceState(null, "", "/" + search1);
    window.dispatchEvent(new PopStateEvent("popstate"));
    await vi.waitFor(() => expect(markers()).toBe(6));

    expect(calls).toHaveLength(3);
    expect(calls[2]!.url).toBe(calls[0]!.url);
    expect(push).toHaveBeenCalledTimes(2); // replay adds no new entry
    expect(a.state().form.keyword).toBe("");
    expect(root.querySelector<HTMLInputElement>("input[name=keyword]")!.value).toBe("");
  });

  it("runs a deep-linked query on startup", async () => {
    window.history.replaceState(null, "", "/?kw=storm");
    const { calls, fetchImpl } = harness(() => kEvents(1));
    mount(fetchImpl);
    await vi.waitFor(() => expect(label()).toBe("1 events"));
    expect(calls.map((c) => c.url)).toEqual(["/events?keyword=storm"]);
    expect(markers()).toBe(1);
    expect(root.querySelector<HTMLInputElement>("input[name=keyword]")!.value).toBe("storm");
  });
});
