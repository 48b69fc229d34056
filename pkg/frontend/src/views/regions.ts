import { RegionCounts, RegionEntry } from "../api.js";
import { escapeHtml, formatCount } from "../format.js";
import { BOX_SIZE, MAP_HEIGHT, MAP_WIDTH, districtBoxes } from "../fixtures/districts.js";

function demographicTitle(entry: RegionEntry): string {
  const sex = Object.entries(entry.by_sex)
    .map(([k, v]) => `${k}: ${v}`)
    .join(", ");
  const age = Object.entries(entry.by_age)
    .filter(([, v]) => v > 0)
    .map(([k, v]) => `${k}: ${v}`)
    .join(", ");
  return `${entry.district_name ?? entry.city_name} — ${entry.count} kasus (${sex}${age ? "; " + age : ""})`;
}

/** Schematic choropleth: one box per district, shaded by case weight, with
 * a demographic popover per box and a table fallback. */
export function renderRegionMap(data: RegionCounts): string {
  const boxes = districtBoxes();
  const known = data.regions.filter((r) => r.district && r.district !== "UNKNOWN");
  const top = Math.max(1, ...known.map((r) => r.count));
  const cells = known
    .map((r) => {
      const box = boxes[r.district as string];
      if (!box) {
        return "";
      }
      const weight = r.count / top; // display shading only
      const fill = `rgba(178,24,43,${(0.08 + 0.92 * weight).toFixed(3)})`;
      return (
        `<g><rect x="${box.x}" y="${box.y}" width="${BOX_SIZE}" height="${BOX_SIZE}" ` +
        `fill="${fill}" stroke="#ffffff" data-district="${r.district}" data-count="${r.count}">` +
        `<title>${escapeHtml(demographicTitle(r))}</title></rect>` +
        `<text x="${box.x + 2}" y="${box.y + BOX_SIZE - 4}" font-size="8" fill="#222">` +
        `${escapeHtml((r.district_name ?? "").slice(0, 9))}</text></g>`
      );
    })
    .join("");
  const unknown = data.regions.find((r) => (r.district ?? r.city) === "UNKNOWN");
  const unknownNote = unknown && unknown.count > 0
    ? `<p class="unknown" data-count="${unknown.count}">Wilayah belum diketahui: ${formatCount(unknown.count)}</p>`
    : "";
  const table = data.regions
    .map(
      (r) =>
        `<tr><td>${escapeHtml(r.city_name)}</td><td>${escapeHtml(r.district_name ?? "")}</td>` +
        `<td data-value="${r.count}">${formatCount(r.count)}</td></tr>`,
    )
    .join("");
  return (
    `<section aria-label="Peta kasus positif per wilayah (per ${escapeHtml(data.as_of)})">` +
    `<svg viewBox="0 0 ${MAP_WIDTH} ${MAP_HEIGHT}" role="img" aria-label="Peta skematik kecamatan">${cells}</svg>` +
    unknownNote +
    `<details><summary>Tabel wilayah</summary><table class="fallback">` +
    `<thead><tr><th>Wilayah Kota</th><th>Kecamatan</th><th>Jumlah Positif</th></tr></thead>` +
    `<tbody>${table}</tbody></table></details></section>`
  );
}
