import "leaflet/dist/leaflet.css";
import "./style.css";

import { createApp } from "./app";

// Deploy-time knobs without a rebuild: define window.RADAR_UI_CONFIG in a
// script tag ahead of the bundle (tileUrl, apiBase, pollIntervalS).
interface UiConfig {
  tileUrl?: string;
  apiBase?: string;
  pollIntervalS?: number;
}

declare global {
  interface Window {
    RADAR_UI_CONFIG?: UiConfig;
  }
}

const cfg = window.RADAR_UI_CONFIG ?? {};
const root = document.getElementById("app");
if (root === null) throw new Error("missing #app mount point");

createApp(root, {
  apiBase: cfg.apiBase ?? "",
  tileUrl: cfg.tileUrl,
  pollIntervalS: cfg.pollIntervalS ?? 15,
});
