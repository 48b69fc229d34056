import { NationalSummary, Summary } from "../api.js";
import { escapeHtml, formatCount } from "../format.js";

const CARDS: [keyof Summary, string][] = [
  ["confirmed", "Kasus terkonfirmasi"],
  ["active", "Kasus aktif"],
  ["hospitalized", "Dirawat"],
  ["self_isolation", "Isolasi mandiri"],
  ["recovered", "Sembuh"],
  ["dead", "Meninggal"],
  ["asymptomatic", "Tanpa gejala"],
  ["symptomatic", "Bergejala"],
  ["unknown_symptoms", "Belum diketahui"],
];

function card(label: string, value: number): string {
  return (
    `<div class="card"><div class="card-value" data-value="${value}">` +
    `${formatCount(value)}</div><div class="card-label">${escapeHtml(label)}</div></div>`
  );
}

/** Side-by-side national and province cumulative summary cards. */
export function renderSummary(local: Summary, national: NationalSummary): string {
  const localCards = CARDS.map(([key, label]) => card(label, local[key] as number)).join("");
  let nationalCards: string;
  if (national.latest === null) {
    nationalCards = `<p class="empty">Belum ada data nasional</p>`;
  } else {
    const n = national.latest;
    nationalCards = [
      card("Kasus terkonfirmasi", n.confirmed),
      card("Kasus aktif", n.active),
      card("Sembuh", n.recovered),
      card("Meninggal", n.dead),
    ].join("");
  }
  return (
    `<section class="summary" aria-label="Ringkasan kumulatif">` +
    `<div class="summary-panel"><h3>Indonesia</h3><div class="cards">${nationalCards}</div></div>` +
    `<div class="summary-panel"><h3>Jakarta (per ${escapeHtml(local.as_of)})</h3>` +
    `<div class="cards">${localCards}</div></div>` +
    `</section>`
  );
}
