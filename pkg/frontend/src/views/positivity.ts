import { PositivityRow } from "../api.js";
import { formatCount, formatPercent } from "../format.js";

/** Daily testing table, person-level and specimen-level side by side. */
export function renderPositivity(rows: PositivityRow[]): string {
  const body = rows
    .map(
      (r) =>
        `<tr><td>${r.date}</td>` +
        `<td data-value="${r.people_tested}">${formatCount(r.people_tested)}</td>` +
        `<td data-value="${r.people_positive}">${formatCount(r.people_positive)}</td>` +
        `<td data-value="${r.people_negative}">${formatCount(r.people_negative)}</td>` +
        `<td data-value="${r.person_positivity}">${formatPercent(r.person_positivity)}</td>` +
        `<td data-value="${r.specimens_tested}">${formatCount(r.specimens_tested)}</td>` +
        `<td data-value="${r.specimens_positive}">${formatCount(r.specimens_positive)}</td>` +
        `<td data-value="${r.specimens_negative}">${formatCount(r.specimens_negative)}</td>` +
        `<td data-value="${r.specimen_positivity}">${formatPercent(r.specimen_positivity)}</td></tr>`,
    )
    .join("");
  return (
    `<section aria-label="Positivity rate harian"><table class="positivity"><thead><tr>` +
    `<th>Tanggal</th><th>Jumlah Orang di Test</th><th>Orang Positif Harian</th>` +
    `<th>Orang Negatif Harian</th><th>Positivity Rate Kasus Baru Harian</th>` +
    `<th>Total Spesimen di Test</th><th>Positif</th><th>Negatif</th>` +
    `<th>Positivity Rate Spesimen Harian</th>` +
    `</tr></thead><tbody>${body}</tbody></table></section>`
  );
}
