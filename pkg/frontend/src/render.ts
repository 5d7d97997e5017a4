/** DOM rendering. Numbers arrive pre-computed from the service; the only
 * transformation here is decimal formatting. */

import type { GridRow, PowerResult, VarianceBreakdown } from './api';

export function fmt(x: number | undefined, digits = 4): string {
  if (x === undefined || Number.isNaN(x)) return '—';
  if (Number.isInteger(x) && Math.abs(x) < 1e15) return String(x);
  if (Math.abs(x) < 1e-3 || Math.abs(x) >= 1e6) return x.toExponential(3);
  return x.toFixed(digits);
}

export function clearResults(root: Document | HTMLElement): void {
  for (const el of root.querySelectorAll('[data-result]')) {
    el.textContent = '—';
  }
  const table = root.querySelector('#variance-terms');
  if (table) table.innerHTML = '';
  const chart = root.querySelector('#sensitivity-chart');
  if (chart) chart.innerHTML = '';
  const effect = root.querySelector('#design-effect-value');
  if (effect) effect.textContent = '—';
}

export function showError(root: Document | HTMLElement, message: string): void {
  clearResults(root);
  const banner = root.querySelector('#error-banner') as HTMLElement | null;
  if (banner) {
    banner.textContent = message;
    banner.hidden = false;
  }
}

export function clearError(root: Document | HTMLElement): void {
  const banner = root.querySelector('#error-banner') as HTMLElement | null;
  if (banner) {
    banner.textContent = '';
    banner.hidden = true;
  }
}

export function renderPowerPanel(
  root: Document | HTMLElement,
  result: PowerResult,
  warnings: string[],
): void {
  clearError(root);
  const set = (id: string, text: string) => {
    const el = root.querySelector(`#${id}`);
    if (el) el.textContent = text;
  };
  set('result-m', result.M !== undefined ? fmt(result.M) : '—');
  set('result-m-continuous', result.m_continuous !== undefined ? fmt(result.m_continuous, 2) : '—');
  set('result-mde', result.mde !== undefined ? fmt(result.mde) : fmt(result.achieved_mde));
  set('result-df', fmt(result.df));
  set('result-factor', fmt(result.factor));
  set('result-variance', fmt(result.variance.total, 6));
  const warn = root.querySelector('#warnings') as HTMLElement | null;
  if (warn) {
    warn.textContent = warnings.join(' ');
    warn.hidden = warnings.length === 0;
  }
  renderVarianceTerms(root, result.variance);
}

export function renderVarianceTerms(root: Document | HTMLElement, vb: VarianceBreakdown): void {
  const table = root.querySelector('#variance-terms');
  if (!table) return;
  table.innerHTML = '';
  const header = document.createElement('tr');
  header.innerHTML = '<th>group</th><th>weight</th><th>contribution</th><th>detail</th>';
  table.appendChild(header);
  vb.terms.forEach((terms, i) => {
    const row = document.createElement('tr');
    const detail = Object.entries(terms)
      .filter(([k, v]) => typeof v === 'number' && k !== 'period')
      .map(([k, v]) => `${k}=${fmt(v as number, 5)}`)
      .join('  ');
    row.innerHTML =
      `<td>${i + 1}</td><td>${fmt(vb.weights[i])}</td>` +
      `<td data-result>${fmt(vb.per_group[i], 6)}</td><td class="detail">${detail}</td>`;
    table.appendChild(row);
  });
}

/** Inline SVG polyline; x is the swept parameter, y the responded quantity. */
export function renderSensitivity(
  root: Document | HTMLElement,
  rows: GridRow[],
  parameter: string,
  yKey: 'M' | 'mde',
): void {
  const host = root.querySelector('#sensitivity-chart');
  if (!host) return;
  host.innerHTML = '';
  const points = rows
    .filter((r) => typeof r[yKey] === 'number')
    .map((r) => ({ x: r[parameter] as number, y: r[yKey] as number }));
  if (points.length === 0) {
    host.textContent = 'no feasible points in this sweep';
    return;
  }
  const w = 560;
  const h = 220;
  const pad = 40;
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = (x: number) => pad + ((x - xMin) / (xMax - xMin || 1)) * (w - 2 * pad);
  const sy = (y: number) => h - pad - ((y - yMin) / (yMax - yMin || 1)) * (h - 2 * pad);
  const path = points.map((p) => `${sx(p.x).toFixed(1)},${sy(p.y).toFixed(1)}`).join(' ');
  const svgNs = 'http://www.w3.org/2000/svg';
  const svg = document.createElementNS(svgNs, 'svg');
  svg.setAttribute('viewBox', `0 0 ${w} ${h}`);
  svg.setAttribute('role', 'img');
  const line = document.createElementNS(svgNs, 'polyline');
  line.setAttribute('points', path);
  line.setAttribute('fill', 'none');
  line.setAttribute('stroke', '#2563eb');
  line.setAttribute('stroke-width', '2');
  svg.appendChild(line);
  for (const p of points) {
    const dot = document.createElementNS(svgNs, 'circle');
    dot.setAttribute('cx', sx(p.x).toFixed(1));
    dot.setAttribute('cy', sy(p.y).toFixed(1));
    dot.setAttribute('r', '3');
    dot.setAttribute('fill', '#2563eb');
    dot.setAttribute('data-x', String(p.x));
    dot.setAttribute('data-y', String(p.y));
    svg.appendChild(dot);
  }
  const axis = document.createElementNS(svgNs, 'text');
  axis.setAttribute('x', String(w / 2));
  axis.setAttribute('y', String(h - 8));
  axis.setAttribute('text-anchor', 'middle');
  axis.textContent = `${yKey} vs ${parameter} (${fmt(yMin)} … ${fmt(yMax)})`;
  svg.appendChild(axis);
  host.appendChild(svg);
}

export function renderDesignEffect(root: Document | HTMLElement, value: number): void {
  const el = root.querySelector('#design-effect-value');
  if (el) el.textContent = fmt(value, 3);
}
