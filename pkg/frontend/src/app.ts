/** Application wiring: form, map, banner, history, and status polling.
 *
 * All detection semantics live server-side; this module only moves
 * validated queries out and renders whatever comes back. Rendered state
 * is a function of (last successful response, current form text): errors
 * update the banner but never touch the marker set.
 *
 * Concurrency rule: at most one events query is in flight. A newer
 * submission aborts the older request and wins regardless of arrival
 * order.
 */

import { ApiClient, type EventQuery, type EventsResponse, type StatusInfo } from "./api";
import type { ClusterOptions } from "./cluster";
import { fillMembers, MapView } from "./mapview";
import {
  EMPTY_FORM,
  formToSearch,
  type QueryForm,
  refineQuery,
  searchToForm,
  validateForm,
} from "./query";

export interface AppOptions {
  apiBase?: string;
  fetchImpl?: typeof fetch;
  tileUrl?: string;
  /** Status poll period in seconds; 0 disables polling. */
  pollIntervalS?: number;
  center?: [number, number];
  zoom?: number;
  clustering?: ClusterOptions;
}

interface AppState {
  form: QueryForm;
  lastResponse: EventsResponse | null;
  banner: string | null;
  validation: string[];
  pending: boolean;
}

export interface App {
  readonly mapView: MapView;
  /** Snapshot of the current state, for inspection. */
  state(): Readonly<AppState>;
  setField(field: keyof QueryForm, value: string): void;
  submit(): Promise<void>;
  destroy(): void;
}

const FIELDS: [keyof QueryForm, string, string][] = [
  ["from", "datetime-local", "from"],
  ["to", "datetime-local", "to"],
  ["keyword", "text", "keyword"],
  ["lat", "text", "lat"],
  ["lon", "text", "lon"],
  ["radiusM", "text", "radius m"],
];

function buildDom(root: HTMLElement): Record<string, HTMLElement> {
  root.textContent = "";
  root.classList.add("app");

  const topbar = document.createElement("header");
  topbar.className = "topbar";
  const title = document.createElement("h1");
  title.textContent = "georadar";
  const statusLine = document.createElement("span");
  statusLine.className = "status-line";
  topbar.append(title, statusLine);

  const form = document.createElement("form");
  form.className = "query-form";
  for (const [field, type, labelText] of FIELDS) {
    const label = document.createElement("label");
    label.append(labelText);
    const input = document.createElement("input");
    input.name = field;
    input.type = type;
    label.appendChild(input);
    form.appendChild(label);
  }
  const button = document.createElement("button");
  button.type = "submit";
  button.textContent = "search";
  form.appendChild(button);

  const validation = document.createElement("div");
  validation.className = "validation";
  validation.setAttribute("role", "alert");
  validation.hidden = true;

  const banner = document.createElement("div");
  banner.className = "banner";
  banner.hidden = true;
  const bannerText = document.createElement("span");
  bannerText.className = "banner-text";
  const bannerDismiss = document.createElement("button");
  bannerDismiss.type = "button";
  bannerDismiss.className = "banner-dismiss";
  bannerDismiss.textContent = "dismiss";
  banner.append(bannerText, bannerDismiss);

  const countLabel = document.createElement("div");
  countLabel.className = "count-label";

  const mapContainer = document.createElement("div");
  mapContainer.className = "map-container";

  root.append(topbar, form, validation, banner, countLabel, mapContainer);
  return { statusLine, form, validation, banner, bannerText, bannerDismiss, countLabel, mapContainer };
}

function statusText(s: StatusInfo): string {
  const win = s.window === null ? "no window" : `window ${s.window.start}..${s.window.end}`;
  return `tick ${s.tick}, ${win}, ${s.events} events, ${s.vocabulary} words`;
}

export function createApp(root: HTMLElement, opts: AppOptions = {}): App {
  const client = new ApiClient(opts.apiBase ?? "", opts.fetchImpl ?? fetch.bind(globalThis));
  const dom = buildDom(root);
  const form = dom.form as HTMLFormElement;

  const state: AppState = {
    form: { ...EMPTY_FORM },
    lastResponse: null,
    banner: null,
    validation: [],
    pending: false,
  };

  let detailCtl: AbortController | null = null;
  const mapView = new MapView(dom.mapContainer!, {
    tileUrl: opts.tileUrl,
    clustering: opts.clustering,
    center: opts.center,
    zoom: opts.zoom,
    onExpand: (eventId, membersEl) => {
      detailCtl?.abort();
      const ctl = new AbortController();
      detailCtl = ctl;
      client.detail(eventId, ctl.signal).then(
        (detail) => {
          if (!ctl.signal.aborted) fillMembers(membersEl, detail);
        },
        (err: unknown) => {
          if (ctl.signal.aborted) return;
          membersEl.textContent = `could not load tweets: ${err instanceof Error ? err.message : String(err)}`;
        },
      );
    },
  });

  const inputs = new Map<keyof QueryForm, HTMLInputElement>();
  for (const input of Array.from(form.querySelectorAll("input"))) {
    const field = input.name as keyof QueryForm;
    inputs.set(field, input);
    input.addEventListener("input", () => {
      state.form = refineQuery(state.form, { [field]: input.value });
    });
  }

  function syncFormInputs(): void {
    for (const [field, input] of inputs) input.value = state.form[field];
  }

  // Markers re-render only when the response object changes; the marker
  // set must track successful responses and nothing else.
  let renderedResponse: EventsResponse | null = null;
  function render(): void {
    const resp = state.lastResponse;
    dom.countLabel!.textContent = resp === null ? "" : `${resp.events.length} events`;

    dom.validation!.hidden = state.validation.length === 0;
    dom.validation!.textContent = state.validation.join("; ");

    dom.banner!.hidden = state.banner === null;
    dom.bannerText!.textContent = state.banner ?? "";

    form.classList.toggle("pending", state.pending);

    if (resp !== renderedResponse) {
      mapView.render(resp === null ? [] : resp.events);
      renderedResponse = resp;
    }
  }

  let inflight: AbortController | null = null;
  async function runQuery(query: EventQuery): Promise<void> {
    inflight?.abort();
    const ctl = new AbortController();
    inflight = ctl;
    state.pending = true;
    render();
    try {
      const resp = await client.events(query, ctl.signal);
      if (inflight !== ctl) return; // a newer submission took over
      inflight = null;
      state.pending = false;
      state.lastResponse = resp;
      state.banner = null;
      render();
      mapView.fitTo(resp.events);
    } catch (err: unknown) {
      if (inflight !== ctl || ctl.signal.aborted) return;
      inflight = null;
      state.pending = false;
      state.banner = `query failed: ${err instanceof Error ? err.message : String(err)}`;
      render();
    }
  }

  async function submitQuery(push: boolean): Promise<void> {
    const result = validateForm(state.form);
    if (!result.ok) {
      // invalid forms never leave the client
      state.validation = result.errors;
      render();
      return;
    }
    state.validation = [];
    if (push) {
      window.history.pushState(null, "", window.location.pathname + formToSearch(state.form));
    }
    await runQuery(result.query);
  }

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void submitQuery(true);
  });
  dom.bannerDismiss!.addEventListener("click", () => {
    state.banner = null;
    render();
  });

  // Back/forward restore the form text recorded at submission time and
  // rerun it, replaying the result set without a new history entry.
  function onPop(): void {
    state.form = searchToForm(window.location.search);
    syncFormInputs();
    if (window.location.search === "") {
      state.lastResponse = null;
      state.validation = [];
      render();
      return;
    }
    void submitQuery(false);
  }
  window.addEventListener("popstate", onPop);

  let pollTimer: ReturnType<typeof setInterval> | null = null;
  const pollS = opts.pollIntervalS ?? 0;
  if (pollS > 0) {
    const tickStatus = async (): Promise<void> => {
      try {
        dom.statusLine!.textContent = statusText(await client.status());
      } catch {
        dom.statusLine!.textContent = "service unreachable";
      }
    };
    void tickStatus();
    pollTimer = setInterval(() => void tickStatus(), pollS * 1000);
  }

  // Deep link: restore and rerun a query arriving in the URL.
  if (window.location.search !== "") {
    state.form = searchToForm(window.location.search);
    syncFormInputs();
    void submitQuery(false);
  }

  render();

  return {
    mapView,
    state: () => ({ ...state, form: { ...state.form }, validation: [...state.validation] }),
    setField(field, value) {
      state.form = refineQuery(state.form, { [field]: value });
      const input = inputs.get(field);
      if (input !== undefined) input.value = value;
    },
    submit: () => submitQuery(true),
    destroy() {
      if (pollTimer !== null) clearInterval(pollTimer);
      window.removeEventListener("popstate", onPop);
      inflight?.abort();
      detailCtl?.abort();
      mapView.destroy();
    },
  };
}
