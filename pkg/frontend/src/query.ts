/** Query form state: raw field text, pure refinement, and validation.
 *
 * The form is the analyst's draft; nothing leaves the client until
 * validateForm approves it. Validation mirrors the service's own rules
 * (span not inverted, geo fields all-or-none, radius positive) so a
 * request that passes here cannot 400 on shape.
 */

import type { EventQuery } from "./api";

export interface QueryForm {
  from: string; // datetime-local text, "" when unset
  to: string;
  keyword: string;
  lat: string;
  lon: string;
  radiusM: string;
}

export const EMPTY_FORM: QueryForm = {
  from: "",
  to: "",
  keyword: "",
  lat: "",
  lon: "",
  radiusM: "",
};

/** Pure transition: returns a new form, never mutates the current one. */
export function refineQuery(current: QueryForm, edit: Partial<QueryForm>): QueryForm {
  return { ...current, ...edit };
}

export type ValidationResult =
  | { ok: true; query: EventQuery }
  | { ok: false; errors: string[] };

function parseEpoch(text: string, label: string, errors: string[]): number | undefined {
  const trimmed = text.trim();
  if (trimmed === "") return undefined;
  const ms = Date.parse(trimmed);
  if (Number.isNaN(ms)) {
    errors.push(`${label} is not a valid date`);
    return undefined;
  }
  return Math.floor(ms / 1000);
}

function parseNum(text: string, label: string, errors: string[]): number | undefined {
  const trimmed = text.trim();
  if (trimmed === "") return undefined;
  const value = Number(trimmed);
  if (!Number.isFinite(value)) {
    errors.push(`${label} is not a number`);
    return undefined;
  }
  return value;
}

export function validateForm(form: QueryForm): ValidationResult {
  const errors: string[] = [];

  const from = parseEpoch(form.from, "from", errors);
  const to = parseEpoch(form.to, "to", errors);
  if (from !== undefined && to !== undefined && from > to) {
    errors.push("time span is inverted: from is after to");
  }

  const lat = parseNum(form.lat, "lat", errors);
  const lon = parseNum(form.lon, "lon", errors);
  const radiusM = parseNum(form.radiusM, "radius", errors);
  const given = [lat, lon, radiusM].filter((v) => v !== undefined).length;
  if (given !== 0 && given !== 3) {
    errors.push("lat, lon, and radius must be given together");
  }
  if (lat !== undefined && Math.abs(lat) > 90) errors.push("lat must be within [-90, 90]");
  if (lon !== undefined && Math.abs(lon) > 180) errors.push("lon must be within [-180, 180]");
  if (radiusM !== undefined && radiusM <= 0) errors.push("radius must be positive");

  if (errors.length > 0) return { ok: false, errors };

  const keyword = form.keyword.trim();
  const query: EventQuery = {};
  if (from !== undefined) query.from = from;
  if (to !== undefined) query.to = to;
  if (keyword !== "") query.keyword = keyword;
  if (given === 3) {
    query.lat = lat;
    query.lon = lon;
    query.radius_m = radiusM;
  }
  return { ok: true, query };
}

// History serialization keeps the raw field text, not the parsed query,
// so back/forward restores exactly what was typed and revalidates to the
// same request parameters.

const PARAM_KEYS: [keyof QueryForm, string][] = [
  ["from", "from"],
  ["to", "to"],
  ["keyword", "kw"],
  ["lat", "lat"],
  ["lon", "lon"],
  ["radiusM", "r"],
];

export function formToSearch(form: QueryForm): string {
  const params = new URLSearchParams();
  for (const [field, key] of PARAM_KEYS) {
    if (form[field] !== "") params.set(key, form[field]);
  }
  const qs = params.toString();
  return qs ? "?" + qs : "";
}

export function searchToForm(search: string): QueryForm {
  const params = new URLSearchParams(search);
  const form = { ...EMPTY_FORM };
  for (const [field, key] of PARAM_KEYS) {
    const value = params.get(key);
    if (value !== null) form[field] = value;
  }
  return form;
}
