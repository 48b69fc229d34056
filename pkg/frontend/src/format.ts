/** Indonesian-locale display formatting: dot thousands groups, comma
 * decimals ("775.195", "98,4%"). Display-only and reversible. */

export function formatCount(value: number): string {
  const sign = value < 0 ? "-" : "";
  const digits = Math.abs(Math.trunc(value)).toString();
  let grouped = "";
  for (let i = 0; i < digits.length; i++) {
    const fromEnd = digits.length - i;
    grouped += digits[i];
    if (fromEnd > 1 && fromEnd % 3 === 1) {
      grouped += ".";
    }
  }
  return sign + grouped;
}

export function parseCount(text: string): number {
  return parseInt(text.replace(/\./g, ""), 10);
}

export function formatPercent(value: number | null): string {
  if (value === null) {
    return "–";
  }
  return `${value.toFixed(1).replace(".", ",")}%`;
}

export function parsePercent(text: string): number | null {
  if (text === "–") {
    return null;
  }
  return parseFloat(text.replace("%", "").replace(",", "."));
}

/** "775.195 (98,4%)" — the category-table cell form. */
export function formatCountWithPercent(count: number, percent: number | null): string {
  return `${formatCount(count)} (${formatPercent(percent)})`;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
