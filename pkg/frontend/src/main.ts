import { Dashboard } from "./app.js";
import { renderBedForm } from "./views/beds.js";

/** Browser entry: mounts the dashboard into #app and polls the API. */

const VIEWS = [
  "summary", "categories", "daily", "cumulative", "positivity",
  "regions", "crosstab", "beds", "hospital-board", "finder",
];

function mount(): void {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  const params = new URLSearchParams(window.location.search);
  const dashboard = new Dashboard({
    base: params.get("api") ?? "",
    credential: params.get("credential") ?? undefined,
    hospital: params.get("hospital") ?? undefined,
    refreshMs: Number(params.get("refresh") ?? 60_000),
  });

  root.innerHTML =
    `<header id="header"></header>` +
    VIEWS.map((v) => `<div id="view-${v}"></div>`).join("") +
    `<div id="view-bed-form"></div>` +
    `<div id="finder-controls"><label>Cari ruangan <select id="finder-ward">` +
    `<option value="icu_neg_vent">ICU tekanan negatif + ventilator</option>` +
    `<option value="picu">PICU</option><option value="nicu">NICU</option>` +
    `<option value="iso_neg">Isolasi tekanan negatif</option></select></label>` +
    `<label>Minimal <input id="finder-min" value="1" inputmode="numeric"></label>` +
    `<button id="finder-go">Cari</button></div>`;

  const paint = (): void => {
    const header = document.getElementById("header");
    if (header) {
      header.innerHTML = dashboard.headerHtml();
    }
    for (const view of VIEWS) {
      const el = document.getElementById(`view-${view}`);
      const html = dashboard.viewHtml(view);
      // render is idempotent on equal data: skip identical HTML to avoid churn
      if (el && el.innerHTML !== html) {
        el.innerHTML = html;
      }
    }
  };

  const hospital = params.get("hospital");
  if (hospital) {
    const formHost = document.getElementById("view-bed-form");
    if (formHost) {
      formHost.innerHTML = renderBedForm(hospital, null);
      formHost.addEventListener("submit", (event) => {
        event.preventDefault();
        const form = event.target as HTMLFormElement;
        const state = {
          ward: (form.elements.namedItem("ward") as HTMLSelectElement).value,
          total: (form.elements.namedItem("total") as HTMLInputElement).value,
          occupied: (form.elements.namedItem("occupied") as HTMLInputElement).value,
        };
        void dashboard.submitBedForm(state).then(() => {
          formHost.innerHTML = dashboard.viewHtml("bed-form") || renderBedForm(hospital, null);
          paint();
        });
      });
    }
  }

  document.getElementById("finder-go")?.addEventListener("click", () => {
    const ward = (document.getElementById("finder-ward") as HTMLSelectElement).value;
    const min = Number((document.getElementById("finder-min") as HTMLInputElement).value) || 1;
    void dashboard.findBeds(ward, min).then(paint);
  });

  const tick = (): void => {
    void dashboard.refresh().then(paint);
  };
  tick();
  window.setInterval(tick, Number(params.get("refresh") ?? 60_000));
}

mount();
