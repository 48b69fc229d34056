import { CategoryBreakdown } from "../api.js";
import { escapeHtml, formatCount, formatCountWithPercent } from "../format.js";

const CATEGORY_LABELS: Record<string, string> = {
  suspect: "Suspek",
  probable: "Probable",
  traveler: "Pelaku Perjalanan",
  close_contact: "Kontak Erat",
  discarded: "Discarded",
  confirmed: "Konfirmasi",
};

const BUCKET_LABELS: Record<string, string> = {
  finished_isolation: "Selesai Isolasi",
  home_isolation: "Isolasi di Rumah",
  hospital_isolation: "Isolasi di RS",
  hospitalized: "Dirawat",
  self_isolation: "Isolasi Mandiri",
  recovered: "Sembuh",
  dead: "Meninggal",
};

/** Category detail table: every cell is "count (percent)" straight from the
 * API; the row total closes each row. */
export function renderCategories(data: CategoryBreakdown): string {
  const rows: string[] = [];
  for (const [category, entry] of Object.entries(data.categories)) {
    const cells: string[] = [];
    for (const [bucket, cell] of Object.entries(entry.buckets)) {
      cells.push(
        `<td data-category="${category}" data-bucket="${bucket}" data-count="${cell.count}">` +
        `${formatCountWithPercent(cell.count, cell.percent)}<br>` +
        `<small>${escapeHtml(BUCKET_LABELS[bucket] ?? bucket)}</small></td>`,
      );
    }
    rows.push(
      `<tr><th scope="row">${escapeHtml(CATEGORY_LABELS[category] ?? category)}</th>` +
      cells.join("") +
      `<td class="total" data-total="${entry.total}">${formatCount(entry.total)} Total</td></tr>`,
    );
  }
  return (
    `<section aria-label="Rincian kategori kasus (per ${escapeHtml(data.as_of)})">` +
    `<table class="categories"><tbody>${rows.join("")}</tbody></table></section>`
  );
}
