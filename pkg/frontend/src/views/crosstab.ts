import { Crosstab } from "../api.js";
import { escapeHtml, formatCount } from "../format.js";

const SEX_LABELS: Record<string, string> = {
  male: "Laki-laki",
  female: "Perempuan",
  unknown: "Belum diketahui",
};

/** Age-band by sex heat table over confirmed cases. */
export function renderCrosstab(data: Crosstab): string {
  const bands = Object.keys(data.matrix);
  const sexes = bands.length ? Object.keys(data.matrix[bands[0]]) : [];
  const top = Math.max(1, ...bands.flatMap((b) => sexes.map((s) => data.matrix[b][s])));
  const header = sexes.map((s) => `<th scope="col">${escapeHtml(SEX_LABELS[s] ?? s)}</th>`).join("");
  const rows = bands
    .map((band) => {
      const cells = sexes
        .map((sex) => {
          const value = data.matrix[band][sex];
          const heat = (0.05 + 0.95 * (value / top)).toFixed(3); // display shading only
          return (
            `<td style="background:rgba(33,102,172,${heat})" data-band="${band}" ` +
            `data-sex="${sex}" data-value="${value}">${formatCount(value)}</td>`
          );
        })
        .join("");
      return `<tr><th scope="row">${escapeHtml(band)}</th>${cells}</tr>`;
    })
    .join("");
  return (
    `<section aria-label="Tabulasi silang usia dan jenis kelamin (per ${escapeHtml(data.as_of)})">` +
    `<table class="crosstab"><thead><tr><th>Kelompok usia</th>${header}</tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<p>Total terkonfirmasi: <span data-value="${data.total}">${formatCount(data.total)}</span></p>` +
    `</section>`
  );
}
