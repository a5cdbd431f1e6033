/** Grid clustering for map markers, pure in (events, zoom, options).
 *
 * Below or at the threshold zoom, events are bucketed by web-mercator
 * pixel cell so a zoomed-out view shows counts instead of a marker pile.
 * Above the threshold every event stands alone.
 */

import type { EventPayload } from "./api";

export interface ClusterOptions {
  thresholdZoom: number;
  cellPx: number;
}

export const DEFAULT_CLUSTERING: ClusterOptions = { thresholdZoom: 11, cellPx: 64 };

export interface MarkerGroup {
  lat: number; // mean of member positions
  lon: number;
  events: EventPayload[];
}

// Standard web-mercator world-pixel projection at integer zoom.
function project(lat: number, lon: number, zoom: number): [number, number] {
  const world = 256 * 2 ** zoom;
  const x = ((lon + 180) / 360) * world;
  const phi = (Math.max(-85.05112878, Math.min(85.05112878, lat)) * Math.PI) / 180;
  const y = ((1 - Math.log(Math.tan(phi) + 1 / Math.cos(phi)) / Math.PI) / 2) * world;
  return [x, y];
}

export function clusterEvents(
  events: EventPayload[],
  zoom: number,
  opts: ClusterOptions = DEFAULT_CLUSTERING,
): MarkerGroup[] {
  if (zoom > opts.thresholdZoom) {
    return events.map((e) => ({ lat: e.lat, lon: e.lon, events: [e] }));
  }
  // First-seen cell order keeps the output deterministic for a given
  // response ordering (the service sorts by score then id).
  const byCell = new Map<string, EventPayload[]>();
  for (const event of events) {
    const [x, y] = project(event.lat, event.lon, zoom);
    const key = `${Math.floor(x / opts.cellPx)}:${Math.floor(y / opts.cellPx)}`;
    const bucket = byCell.get(key);
    if (bucket === undefined) byCell.set(key, [event]);
    else bucket.push(event);
  }
  const groups: MarkerGroup[] = [];
  for (const members of byCell.values()) {
    let latSum = 0;
    let lonSum = 0;
    for (const e of members) {
      latSum += e.lat;
      lonSum += e.lon;
    }
    groups.push({
      lat: latSum / members.length,
      lon: lonSum / members.length,
      events: members,
    });
  }
  return groups;
}
