/** Leaflet wrapper: tile layer, event markers, popups, clustering.
 *
 * Rendering is a projection of the last successful query response; the
 * view never filters or re-scores events. The tile URL template is a
 * plain option so any slippy-map server works, keyless by default.
 */

import L from "leaflet";

import type { EventDetail, EventPayload } from "./api";
import { clusterEvents, DEFAULT_CLUSTERING, type ClusterOptions } from "./cluster";
import { fmtScore, fmtSpan, fmtTime } from "./format";

export const DEFAULT_TILE_URL = "https://tile.openstreetmap.org/{z}/{x}/{y}.png";
const DEFAULT_ATTRIBUTION = '&copy; <a href="https://www.openstreetmap.org/copyright">OpenStreetMap</a> contributors';

const TOP_KEYWORDS = 5;

export interface MapViewOptions {
  tileUrl?: string;
  attribution?: string;
  clustering?: ClusterOptions;
  center?: [number, number];
  zoom?: number;
  /** Called when an event popup opens; fills the members element lazily. */
  onExpand?: (eventId: number, membersEl: HTMLElement) => void;
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Popup body for one event; the members block starts collapsed. */
export function popupSkeleton(event: EventPayload): HTMLElement {
  const root = el("div", "popup");
  root.appendChild(el("div", "popup-keywords", event.keywords.slice(0, TOP_KEYWORDS).join(", ")));
  root.appendChild(el("div", "popup-span", fmtSpan(event.t_start, event.t_end)));
  root.appendChild(
    el("div", "popup-score", `score ${fmtScore(event.score)}, ${event.member_ids.length} tweets`),
  );
  const members = el("div", "popup-members");
  members.dataset.eventId = String(event.event_id);
  root.appendChild(members);
  return root;
}

/** Renders fetched member tweets into a popup's members element. */
export function fillMembers(membersEl: HTMLElement, detail: EventDetail): void {
  membersEl.textContent = "";
  const list = el("ul", "member-list");
  for (const tweet of detail.members) {
    const item = el("li", "member-tweet");
    item.appendChild(el("span", "member-time", fmtTime(tweet.timestamp)));
    item.appendChild(el("span", "member-user", ` user ${tweet.user_id} `));
    item.appendChild(el("span", "member-words", tweet.keywords.join(" ")));
    list.appendChild(item);
  }
  membersEl.appendChild(list);
}

export class MapView {
  readonly map: L.Map;
  private readonly markerLayer: L.LayerGroup;
  private readonly clustering: ClusterOptions;
  private readonly onExpand: MapViewOptions["onExpand"];
  private lastEvents: EventPayload[] = [];

  constructor(container: HTMLElement, opts: MapViewOptions = {}) {
    this.clustering = opts.clustering ?? DEFAULT_CLUSTERING;
    this.onExpand = opts.onExpand;
    // Animations off: they add nothing here and need layout the headless
    // test DOM does not provide.
    this.map = L.map(container, {
      center: opts.center ?? [40.73, -73.94],
      zoom: opts.zoom ?? 12,
      maxZoom: 19,
      zoomAnimation: false,
      fadeAnimation: false,
      markerZoomAnimation: false,
    });
    L.tileLayer(opts.tileUrl ?? DEFAULT_TILE_URL, {
      attribution: opts.attribution ?? DEFAULT_ATTRIBUTION,
      maxZoom: 19,
    }).addTo(this.map);
    this.markerLayer = L.layerGroup().addTo(this.map);
    // Clustering depends on zoom, so a zoom change re-projects markers.
    this.map.on("zoomend", () => this.render(this.lastEvents));
  }

  private eventMarker(event: EventPayload): L.Marker {
    const marker = L.marker([event.lat, event.lon], {
      icon: L.divIcon({ className: "evt-marker", iconSize: [14, 14] }),
      title: event.keywords.slice(0, TOP_KEYWORDS).join(", "),
    });
    const body = popupSkeleton(event);
    marker.bindPopup(body, { maxWidth: 320 });
    marker.on("popupopen", () => {
      const membersEl = body.querySelector<HTMLElement>(".popup-members");
      if (membersEl !== null && this.onExpand) {
        membersEl.textContent = "loading tweets...";
        this.onExpand(event.event_id, membersEl);
      }
    });
    return marker;
  }

  private clusterMarker(group: { lat: number; lon: number; events: EventPayload[] }): L.Marker {
    const marker = L.marker([group.lat, group.lon], {
      icon: L.divIcon({
        className: "evt-cluster",
        html: String(group.events.length),
        iconSize: [28, 28],
      }),
    });
    marker.on("click", () => {
      this.map.setView([group.lat, group.lon], Math.min(this.map.getZoom() + 2, 19));
    });
    return marker;
  }

  /** Replaces the marker set with one marker per event (or per cluster). */
  render(events: EventPayload[]): void {
    this.lastEvents = events;
    this.markerLayer.clearLayers();
    for (const group of clusterEvents(events, this.map.getZoom(), this.clustering)) {
      const single = group.events.length === 1 ? group.events[0] : undefined;
      this.markerLayer.addLayer(
        single !== undefined ? this.eventMarker(single) : this.clusterMarker(group),
      );
    }
  }

  markerCount(): number {
    return this.markerLayer.getLayers().length;
  }

  fitTo(events: EventPayload[]): void {
    if (events.length === 0) return;
    const bounds = L.latLngBounds(events.map((e) => [e.lat, e.lon] as [number, number]));
    // A zero-size container (headless DOM) yields a non-finite fit zoom;
    // recenter without touching the zoom rather than poisoning it.
    const zoom = this.map.getBoundsZoom(bounds, false, L.point(48, 48));
    this.map.setView(
      bounds.getCenter(),
      Number.isFinite(zoom) ? Math.min(zoom, 15) : this.map.getZoom(),
    );
  }

  destroy(): void {
    this.map.remove();
  }
}
