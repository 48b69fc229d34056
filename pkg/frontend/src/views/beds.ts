import { BedBoardRow, BedFinderRow, BedReportPayload, ProvinceCapacity } from "../api.js";
import { escapeHtml, formatCount, formatPercent } from "../format.js";

export const WARD_LABELS: Record<string, string> = {
  icu_neg_vent: "ICU Tekanan Negatif dengan Ventilator",
  icu_neg_novent: "ICU Tekanan Negatif tanpa Ventilator",
  icu_std_vent: "ICU tanpa Tekanan Negatif dengan Ventilator",
  icu_std_novent: "ICU tanpa Tekanan Negatif tanpa Ventilator",
  iso_neg: "Isolasi Tekanan Negatif",
  iso_std: "Isolasi tanpa Tekanan Negatif",
  picu: "PICU",
  nicu: "NICU",
  perinatology: "Perinatologi",
  ot_covid: "OK Khusus COVID-19",
  hd_covid: "HD Khusus COVID-19",
};

function staleBadge(stale: boolean | undefined): string {
  return stale ? `<span class="badge stale">data lama</span>` : "";
}

/** Province rollup per ward type; "tersedia" and "sisa kapasitas" come
 * straight from the API. */
export function renderProvinceBeds(data: ProvinceCapacity): string {
  const rows = Object.entries(data.wards)
    .map(([ward, entry]) => {
      const pct = entry.remaining_fraction === null
        ? "–"
        : formatPercent(entry.remaining_fraction * 100);
      return (
        `<tr><th scope="row">${escapeHtml(WARD_LABELS[ward] ?? ward)}</th>` +
        `<td data-value="${entry.total}">${formatCount(entry.total)}</td>` +
        `<td data-value="${entry.occupied}">${formatCount(entry.occupied)}</td>` +
        `<td data-value="${entry.available}">${formatCount(entry.available)}</td>` +
        `<td data-raw="${entry.remaining_fraction}">${pct}</td></tr>`
      );
    })
    .join("");
  const stale = data.stale_hospitals.length
    ? `<p class="stale-list">Laporan melewati batas jam: ${data.stale_hospitals.map(escapeHtml).join(", ")}</p>`
    : "";
  return (
    `<section aria-label="Ketersediaan tempat tidur provinsi">` +
    `<table class="beds"><thead><tr><th>Jenis ruangan</th><th>Total</th>` +
    `<th>Terisi</th><th>Tersedia</th><th>Sisa kapasitas</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>${stale}</section>`
  );
}

/** One hospital's board; wards never reported show an explicit no-data
 * marker, distinguishable from reported zeros. */
export function renderHospitalBoard(hospital: string, rows: BedBoardRow[]): string {
  const body = rows
    .map((r) => {
      if (r.no_data) {
        return (
          `<tr><th scope="row">${escapeHtml(WARD_LABELS[r.ward] ?? r.ward)}</th>` +
          `<td colspan="3" class="no-data" data-ward="${r.ward}">belum ada laporan</td><td></td></tr>`
        );
      }
      return (
        `<tr><th scope="row">${escapeHtml(WARD_LABELS[r.ward] ?? r.ward)}</th>` +
        `<td data-value="${r.total}">${formatCount(r.total as number)}</td>` +
        `<td data-value="${r.occupied}">${formatCount(r.occupied as number)}</td>` +
        `<td data-value="${r.available}" data-ward="${r.ward}">${formatCount(r.available as number)}</td>` +
        `<td>${staleBadge(r.stale)}</td></tr>`
      );
    })
    .join("");
  return (
    `<section aria-label="Tempat tidur ${escapeHtml(hospital)}">` +
    `<table class="beds"><thead><tr><th>Jenis ruangan</th><th>Total</th>` +
    `<th>Terisi</th><th>Tersedia</th><th></th></tr></thead><tbody>${body}</tbody></table></section>`
  );
}

/** Referral finder: rows render in API order exactly (the UI never
 * re-sorts); empty results get an explicit message, never a blank pane. */
export function renderBedFinder(ward: string, minBeds: number, rows: BedFinderRow[]): string {
  if (rows.length === 0) {
    return (
      `<section aria-label="Pencarian tempat tidur"><p class="empty">` +
      `Tidak ada tempat tidur ${escapeHtml(WARD_LABELS[ward] ?? ward)} &ge; ${minBeds} ditemukan.</p></section>`
    );
  }
  const body = rows
    .map(
      (r, i) =>
        `<tr data-rank="${i}" data-hospital="${escapeHtml(r.hospital)}">` +
        `<td>${i + 1}</td><td>${escapeHtml(r.name)}</td><td>${escapeHtml(r.city)}</td>` +
        `<td data-value="${r.available}">${formatCount(r.available)}</td>` +
        `<td>${staleBadge(r.stale)}</td></tr>`,
    )
    .join("");
  return (
    `<section aria-label="Pencarian tempat tidur">` +
    `<table class="finder"><thead><tr><th>No</th><th>Nama RS</th><th>Wilayah</th>` +
    `<th>Tersedia</th><th></th></tr></thead><tbody>${body}</tbody></table></section>`
  );
}

// --- bed entry form ---------------------------------------------------------

export interface BedFormState {
  hospital: string;
  ward: string;
  total: string;
  occupied: string;
}

export type FormValidation =
  | { ok: true; payload: BedReportPayload }
  | { ok: false; error: string };

/** Client-side validation mirrors the server invariant 0 <= occupied <=
 * total; the server remains authoritative and its rejections are shown
 * verbatim. */
export function validateBedForm(state: BedFormState, reportedAt: string): FormValidation {
  const total = Number(state.total);
  const occupied = Number(state.occupied);
  if (!state.ward || !(state.ward in WARD_LABELS)) {
    return { ok: false, error: "pilih jenis ruangan" };
  }
  if (!Number.isInteger(total) || total < 0) {
    return { ok: false, error: "total tempat tidur harus bilangan bulat >= 0" };
  }
  if (!Number.isInteger(occupied) || occupied < 0) {
    return { ok: false, error: "tempat tidur terisi harus bilangan bulat >= 0" };
  }
  if (occupied > total) {
    return { ok: false, error: `terisi (${occupied}) tidak boleh melebihi total (${total})` };
  }
  return {
    ok: true,
    payload: {
      hospital: state.hospital,
      ward: state.ward,
      total_beds: total,
      occupied_beds: occupied,
      reported_at: reportedAt,
    },
  };
}

export function renderBedForm(hospital: string, error: string | null): string {
  const wards = Object.entries(WARD_LABELS)
    .map(([code, label]) => `<option value="${code}">${escapeHtml(label)}</option>`)
    .join("");
  const banner = error
    ? `<p class="form-error" role="alert">${escapeHtml(error)}</p>`
    : "";
  return (
    `<form id="bed-entry" aria-label="Lapor ketersediaan tempat tidur">` +
    `<h3>Lapor: ${escapeHtml(hospital)}</h3>${banner}` +
    `<label>Jenis ruangan <select name="ward">${wards}</select></label>` +
    `<label>Total tempat tidur <input name="total" inputmode="numeric"></label>` +
    `<label>Terisi <input name="occupied" inputmode="numeric"></label>` +
    `<button type="submit">Kirim laporan</button></form>`
  );
}
