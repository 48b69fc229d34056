import { acceptResponse, ApiClient, ApiError, Envelope } from "./api.js";
import { escapeHtml } from "./format.js";
import { renderBedFinder, renderBedForm, renderHospitalBoard, renderProvinceBeds, validateBedForm } from "./views/beds.js";
import { renderCategories } from "./views/categories.js";
import { renderCrosstab } from "./views/crosstab.js";
import { renderPositivity } from "./views/positivity.js";
import { renderRegionMap } from "./views/regions.js";
import { renderCumulativeChart, renderDailyChart } from "./views/series.js";
import { renderSummary } from "./views/summary.js";

export interface AppOptions {
  base: string;
  credential?: string;
  hospital?: string;          // enables the operator entry form
  refreshMs?: number;         // default 60s polling
  rangeDays?: number;
}

interface ViewState {
  watermark: number | null;
  html: string;
}

/** Page controller: polls the API, renders each view from its latest
 * response, and keeps the last good data on screen when the API drops. */
export class Dashboard {
  private views = new Map<string, ViewState>();
  private lastGoodWatermark: number | null = null;
  private banner = "";
  readonly api: ApiClient;

  constructor(private options: AppOptions, fetcher: typeof fetch = fetch) {
    this.api = new ApiClient(options.base, options.credential, fetcher);
  }

  viewHtml(name: string): string {
    return this.views.get(name)?.html ?? "";
  }

  viewWatermark(name: string): number | null {
    return this.views.get(name)?.watermark ?? null;
  }

  bannerHtml(): string {
    return this.banner;
  }

  /** Render-if-fresh: a response older than what the view shows is dropped. */
  private put<T>(name: string, envelope: Envelope<T>, html: string): void {
    const current = this.views.get(name)?.watermark ?? null;
    if (!acceptResponse(current, envelope.watermark)) {
      return;
    }
    this.views.set(name, { watermark: envelope.watermark, html });
    this.lastGoodWatermark = envelope.watermark;
  }

  private range(): { from: string; to: string } {
    const days = this.options.rangeDays ?? 30;
    const to = new Date();
    const from = new Date(to.getTime() - (days - 1) * 86_400_000);
    return { from: from.toISOString().slice(0, 10), to: to.toISOString().slice(0, 10) };
  }

  async refresh(): Promise<void> {
    const { from, to } = this.range();
    try {
      const [summary, national] = await Promise.all([
        this.api.summary(),
        this.api.nationalSummary(),
      ]);
      this.put("summary", summary, renderSummary(summary.data, national.data));

      const categories = await this.api.categories();
      this.put("categories", categories, renderCategories(categories.data));

      const daily = await this.api.dailySeries(from, to);
      this.put("daily", daily, renderDailyChart(daily.data));

      const cumulative = await this.api.cumulativeSeries(from, to);
      this.put("cumulative", cumulative, renderCumulativeChart(cumulative.data));

      const positivity = await this.api.positivity(from, to);
      this.put("positivity", positivity, renderPositivity(positivity.data));

      const regions = await this.api.regions("district");
      this.put("regions", regions, renderRegionMap(regions.data));

      const crosstab = await this.api.crosstab();
      this.put("crosstab", crosstab, renderCrosstab(crosstab.data));

      const beds = await this.api.provinceBeds();
      this.put("beds", beds, renderProvinceBeds(beds.data));

      if (this.options.hospital) {
        const board = await this.api.bedBoard(this.options.hospital);
        this.put("hospital-board", board,
          renderHospitalBoard(this.options.hospital, board.data));
      }
      this.banner = "";
    } catch (error) {
      // keep every last-good view; surface the outage with its watermark
      const shown = this.lastGoodWatermark === null ? "belum ada" : `${this.lastGoodWatermark}`;
      const reason = error instanceof Error ? error.message : String(error);
      this.banner =
        `<div class="banner offline" role="alert">API tidak terjangkau ` +
        `(${escapeHtml(reason)}); menampilkan data terakhir (watermark ${shown})</div>`;
    }
  }

  async findBeds(ward: string, minBeds: number): Promise<void> {
    const rows = await this.api.findBeds(ward, minBeds);
    this.put("finder", rows, renderBedFinder(ward, minBeds, rows.data));
  }

  /** Submit the entry form; on success re-fetch the operator's own board
   * (no page reload), on rejection surface the server message verbatim. */
  async submitBedForm(state: { ward: string; total: string; occupied: string }):
      Promise<{ ok: boolean; message: string }> {
    const hospital = this.options.hospital;
    if (!hospital) {
      return { ok: false, message: "no hospital credential configured" };
    }
    const checked = validateBedForm({ hospital, ...state }, new Date().toISOString());
    if (!checked.ok) {
      this.views.set("bed-form", {
        watermark: this.viewWatermark("bed-form"),
        html: renderBedForm(hospital, checked.error),
      });
      return { ok: false, message: checked.error };
    }
    try {
      await this.api.submitBedReport(checked.payload);
    } catch (error) {
      const message = error instanceof ApiError ? error.detail : String(error);
      this.views.set("bed-form", {
        watermark: this.viewWatermark("bed-form"),
        html: renderBedForm(hospital, message),
      });
      return { ok: false, message };
    }
    this.views.set("bed-form", {
      watermark: this.viewWatermark("bed-form"),
      html: renderBedForm(hospital, null),
    });
    const board = await this.api.bedBoard(hospital);
    this.put("hospital-board", board, renderHospitalBoard(hospital, board.data));
    return { ok: true, message: "laporan diterima" };
  }

  headerHtml(): string {
    const mark = this.lastGoodWatermark === null ? "—" : `${this.lastGoodWatermark}`;
    return `${this.banner}<p class="watermark">Watermark data: <strong>${mark}</strong></p>`;
  }
}
