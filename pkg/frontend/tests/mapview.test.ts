import { afterEach, describe, expect, it } from "vitest";

import type { EventDetail, EventPayload } from "../src/api";
import { fillMembers, MapView, popupSkeleton } from "../src/mapview";

const evt = (id: number, lat: number, lon: number, over: Partial<EventPayload> = {}): EventPayload => ({
  event_id: id,
  pivot_id: `t${id}`,
  lat,
  lon,
  t_start: 1_700_000_000,
  t_end: 1_700_001_800,
  keywords: ["fire", "smoke", "river", "bridge", "north", "extra"],
  score: 0.8125,
  member_ids: ["t1", "t2", "t3"],
  detected_at: 1_700_001_800,
  ...over,
});

let view: MapView | null = null;

afterEach(() => {
  view?.destroy();
  view = null;
  document.body.textContent = "";
});

function makeView(zoom: number): { view: MapView; container: HTMLElement } {
  const container = document.createElement("div");
  document.body.appendChild(container);
  view = new MapView(container, { zoom });
  return { view, container };
}

describe("MapView rendering", () => {
  it("renders one marker per event above the cluster threshold", () => {
    const { view, container } = makeView(13);
    view.render([evt(1, 40.7, -74.0), evt(2, 40.8, -73.9), evt(3, 40.6, -74.1)]);
    expect(view.markerCount()).toBe(3);
    expect(container.querySelectorAll(".evt-marker")).toHaveLength(3);
    expect(container.querySelectorAll(".evt-cluster")).toHaveLength(0);
  });

  it("replaces markers on re-render instead of accumulating", () => {
    const { view, container } = makeView(13);
    view.render([evt(1, 40.7, -74.0), evt(2, 40.8, -73.9)]);
    view.render([evt(3, 40.6, -74.1)]);
    expect(view.markerCount()).toBe(1);
    expect(container.querySelectorAll(".evt-marker")).toHaveLength(1);
    view.render([]);
    expect(view.markerCount()).toBe(0);
    expect(container.querySelectorAll(".evt-marker")).toHaveLength(0);
  });

  it("shows a counted cluster badge at low zoom", () => {
    const { view, container } = makeView(4);
    view.render([evt(1, 40.7, -74.0), evt(2, 40.701, -74.001), evt(3, 48.85, 2.35)]);
    expect(view.markerCount()).toBe(2);
    const badges = container.querySelectorAll(".evt-cluster");
    expect(badges).toHaveLength(1);
    expect(badges[0]!.textContent).toBe("2");
  });

  it("keeps zoom finite when fitting in a zero-size container", () => {
    const { view } = makeView(12);
    const events = [evt(1, 40.7, -74.0), evt(2, 40.8, -73.9)];
    view.render(events);
    view.fitTo(events);
    expect(Number.isFinite(view.map.getZoom())).toBe(true);
    view.render(events);
    expect(view.markerCount()).toBe(2);
  });
});

describe("popup content", () => {
  it("shows the top keywords, time span, and score", () => {
    const body = popupSkeleton(evt(7, 40.7, -74.0));
    expect(body.querySelector(".popup-keywords")!.textContent).toBe(
      "fire, smoke, river, bridge, north",
    );
    expect(body.querySelector(".popup-span")!.textContent).toContain(" to ");
    expect(body.querySelector(".popup-score")!.textContent).toBe("score 0.813, 3 tweets");
    expect(body.querySelector<HTMLElement>(".popup-members")!.dataset.eventId).toBe("7");
  });

  it("fills member tweets from the detail response", () => {
    const membersEl = document.createElement("div");
    membersEl.textContent = "loading tweets...";
    const detail: EventDetail = {
      event: evt(7, 40.7, -74.0),
      members: [
        { id: "t011", user_id: "u901", timestamp: 1_700_000_100, lat: 40.7, lon: -74.0, keywords: ["fire", "smoke"] },
        { id: "t012", user_id: "u902", timestamp: 1_700_000_200, lat: 40.7, lon: -74.0, keywords: ["fire"] },
      ],
    };
    fillMembers(membersEl, detail);
    const items = membersEl.querySelectorAll(".member-tweet");
    expect(items).toHaveLength(2);
    expect(items[0]!.textContent).toContain("user u901");
    expect(items[0]!.textContent).toContain("fire smoke");
    expect(membersEl.textContent).not.toContain("loading");
  });
});
