/** Small display formatters shared by popups and the status line. */

export function fmtTime(epochS: number): string {
  const d = new Date(epochS * 1000);
  const pad = (n: number) => String(n).padStart(2, "0");
  return (
    `${d.getFullYear()}-${pad(d.getMonth() + 1)}-${pad(d.getDate())} ` +
    `${pad(d.getHours())}:${pad(d.getMinutes())}`
  );
}

export function fmtSpan(startS: number, endS: number): string {
  return `${fmtTime(startS)} to ${fmtTime(endS)}`;
}

export function fmtScore(score: number): string {
  return score.toFixed(3);
}
