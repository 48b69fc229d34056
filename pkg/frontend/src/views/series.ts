import { CumulativePoint, DailyPoint } from "../api.js";
import { escapeHtml, formatCount } from "../format.js";

/** Inline-SVG charts with a table fallback carrying identical numbers.
 * Geometry only scales API values for display; no derived arithmetic. */

const W = 720;
const H = 220;
const PAD = 28;

function scale(values: number[]): (v: number) => number {
  const top = Math.max(1, ...values);
  return (v) => H - PAD - (v / top) * (H - 2 * PAD);
}

function xpos(i: number, n: number): number {
  return PAD + (i * (W - 2 * PAD)) / Math.max(1, n - 1);
}

function polyline(values: number[], y: (v: number) => number, color: string): string {
  const points = values.map((v, i) => `${xpos(i, values.length).toFixed(1)},${y(v).toFixed(1)}`);
  return `<polyline fill="none" stroke="${color}" stroke-width="1.5" points="${points.join(" ")}"/>`;
}

export function renderDailyChart(rows: DailyPoint[]): string {
  const y = scale(rows.map((r) => r.new_positive));
  const barWidth = Math.max(1, (W - 2 * PAD) / Math.max(1, rows.length) - 1);
  const bars = rows
    .map((r, i) => {
      const top = y(r.new_positive);
      return (
        `<rect x="${(xpos(i, rows.length) - barWidth / 2).toFixed(1)}" y="${top.toFixed(1)}" ` +
        `width="${barWidth.toFixed(1)}" height="${(H - PAD - top).toFixed(1)}" fill="#c23b3b">` +
        `<title>${r.date}: ${r.new_positive}</title></rect>`
      );
    })
    .join("");
  const lines =
    polyline(rows.map((r) => r.new_recovered), y, "#3b8c4b") +
    polyline(rows.map((r) => r.new_dead), y, "#444444");
  const table = rows
    .map(
      (r) =>
        `<tr><td>${r.date}</td><td data-value="${r.new_positive}">${formatCount(r.new_positive)}</td>` +
        `<td data-value="${r.new_recovered}">${formatCount(r.new_recovered)}</td>` +
        `<td data-value="${r.new_dead}">${formatCount(r.new_dead)}</td></tr>`,
    )
    .join("");
  return (
    `<section aria-label="Penambahan kasus harian">` +
    `<svg viewBox="0 0 ${W} ${H}" role="img" aria-label="Grafik kasus harian">${bars}${lines}</svg>` +
    `<details><summary>Tabel data harian</summary><table class="fallback">` +
    `<thead><tr><th>Tanggal</th><th>Positif harian</th><th>Sembuh harian</th>` +
    `<th>Meninggal harian</th></tr></thead><tbody>${table}</tbody></table></details></section>`
  );
}

export function renderCumulativeChart(rows: CumulativePoint[]): string {
  const keys: [keyof CumulativePoint, string, string][] = [
    ["hospitalized", "#c28f3b", "Masih perawatan"],
    ["self_isolation", "#3b6fc2", "Isolasi mandiri"],
    ["recovered", "#3b8c4b", "Sembuh"],
    ["dead", "#444444", "Meninggal"],
  ];
  const y = scale(rows.flatMap((r) => keys.map(([k]) => r[k] as number)));
  const lines = keys.map(([k, color]) => polyline(rows.map((r) => r[k] as number), y, color)).join("");
  const legend = keys
    .map(([, color, label]) => `<span style="color:${color}">&#9632; ${escapeHtml(label)}</span>`)
    .join(" ");
  const table = rows
    .map(
      (r) =>
        `<tr><td>${r.date}</td>` +
        keys.map(([k]) => `<td data-value="${r[k]}">${formatCount(r[k] as number)}</td>`).join("") +
        `<td data-value="${r.cumulative_confirmed}">${formatCount(r.cumulative_confirmed)}</td></tr>`,
    )
    .join("");
  return (
    `<section aria-label="Akumulasi kasus">` +
    `<svg viewBox="0 0 ${W} ${H}" role="img" aria-label="Grafik akumulasi">${lines}</svg>` +
    `<p class="legend">${legend}</p>` +
    `<details><summary>Tabel akumulasi</summary><table class="fallback">` +
    `<thead><tr><th>Tanggal</th><th>Masih perawatan</th><th>Isolasi mandiri</th>` +
    `<th>Sembuh</th><th>Meninggal</th><th>Total konfirmasi</th></tr></thead>` +
    `<tbody>${table}</tbody></table></details></section>`
  );
}
