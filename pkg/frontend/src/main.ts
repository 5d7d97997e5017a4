/** Wire the form to the compute service.
 *
 * Requests are debounced and tagged with a sequence number so stale
 * responses never overwrite newer ones; any service failure clears every
 * displayed number and raises the error banner.
 */

import { ApiRequestError, PanelPowerClient, ServiceUnavailableError } from './api';
import type { Scenario } from './api';
import { downloadScenario, parseScenario } from './export';
import { clearResults, renderDesignEffect, renderPowerPanel, renderSensitivity, showError } from './render';
import { DEFAULT_STATE, applyPreset, toScenario, validate } from './state';
import type { FormState } from './state';

const client = new PanelPowerClient('');
let state: FormState = { ...DEFAULT_STATE };
let comparisonSlot: Scenario | null = null;
let sequence = 0;

function field<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function readForm(): FormState {
  const num = (id: string) => Number((field<HTMLInputElement>(id)).value);
  const str = (id: string) => (field<HTMLSelectElement>(id)).value;
  return {
    P: num('f-P'),
    S: (field<HTMLInputElement>('f-S')).value
      .split(',')
      .map((s) => Number(s.trim()))
      .filter((x) => !Number.isNaN(x)),
    split: num('f-split'),
    N: num('f-N'),
    ICC_theta: num('f-icc'),
    rho: num('f-rho'),
    psi: num('f-psi'),
    corr_structure: str('f-structure') as FormState['corr_structure'],
    design_kind: str('f-kind') as FormState['design_kind'],
    family: str('f-family'),
    estimandKind: str('f-estimand') as FormState['estimandKind'],
    l: num('f-l'),
    q: num('f-q'),
    alpha: num('f-alpha'),
    lambda: num('f-lambda'),
    mde: num('f-mde'),
    useCovariates: (field<HTMLInputElement>('f-use-cov')).checked,
    R2_YX: num('f-r2yx'),
    R2_TX: num('f-r2tx'),
    v: num('f-v'),
  };
}

function writeForm(s: FormState): void {
  (field<HTMLInputElement>('f-P')).value = String(s.P);
  (field<HTMLInputElement>('f-S')).value = s.S.join(',');
  (field<HTMLInputElement>('f-split')).value = String(s.split);
  (field<HTMLInputElement>('f-N')).value = String(s.N);
  (field<HTMLInputElement>('f-icc')).value = String(s.ICC_theta);
  (field<HTMLInputElement>('f-rho')).value = String(s.rho);
  (field<HTMLInputElement>('f-psi')).value = String(s.psi);
  (field<HTMLSelectElement>('f-structure')).value = s.corr_structure;
  (field<HTMLSelectElement>('f-kind')).value = s.design_kind;
  (field<HTMLSelectElement>('f-family')).value = s.family;
  (field<HTMLSelectElement>('f-estimand')).value = s.estimandKind;
  (field<HTMLInputElement>('f-l')).value = String(s.l);
  (field<HTMLInputElement>('f-q')).value = String(s.q);
  (field<HTMLInputElement>('f-alpha')).value = String(s.alpha);
  (field<HTMLInputElement>('f-lambda')).value = String(s.lambda);
  (field<HTMLInputElement>('f-mde')).value = String(s.mde);
  (field<HTMLInputElement>('f-use-cov')).checked = s.useCovariates;
  (field<HTMLInputElement>('f-r2yx')).value = String(s.R2_YX);
  (field<HTMLInputElement>('f-r2tx')).value = String(s.R2_TX);
  (field<HTMLInputElement>('f-v')).value = String(s.v);
}

function showValidation(errors: Map<string, string>): void {
  for (const el of document.querySelectorAll('[data-error-for]')) {
    const key = (el as HTMLElement).dataset.errorFor!;
    el.textContent = errors.get(key) ?? '';
  }
  (field<HTMLButtonElement>('btn-compute')).disabled = errors.size > 0;
}

async function compute(): Promise<void> {
  state = readForm();
  const errors = validate(state);
  showValidation(errors);
  if (errors.size > 0) {
    clearResults(document);
    return;
  }
  const seq = ++sequence;
  const scenario = toScenario(state);
  const target = (field<HTMLSelectElement>('f-target')).value;
  try {
    const envelope =
      target === 'mde' && !scenario.query.mde
        ? await client.mde(scenario)
        : await client.clusters(scenario);
    if (seq !== sequence) return; // a newer request superseded this one
    renderPowerPanel(document, envelope.result!, envelope.warnings);
    await sweep(scenario, seq);
  } catch (err) {
    if (seq !== sequence) return;
    if (err instanceof ServiceUnavailableError) {
      showError(document, 'Compute service unreachable. Start it with: panelpower serve');
    } else if (err instanceof ApiRequestError) {
      showError(document, `${err.detail.code}: ${err.detail.message}`);
      markField(err.detail.field);
    } else {
      showError(document, String(err));
    }
  }
}

function markField(fieldName: string | null): void {
  if (!fieldName) return;
  const slot = document.querySelector(`[data-error-for="${fieldName}"]`);
  if (slot) slot.textContent = 'rejected by the service';
}

async function sweep(scenario: Scenario, seq: number): Promise<void> {
  const parameter = (field<HTMLSelectElement>('f-sweep-param')).value;
  const spec = (field<HTMLInputElement>('f-sweep-values')).value;
  const values = spec
    .split(',')
    .map((s) => Number(s.trim()))
    .filter((x) => !Number.isNaN(x));
  if (values.length === 0) return;
  const envelope = await client.grid(scenario, parameter, values, 'clusters');
  if (seq !== sequence) return;
  renderSensitivity(document, envelope.result!.rows, parameter, 'M');
}

async function compare(): Promise<void> {
  state = readForm();
  if (validate(state).size > 0) return;
  const current = toScenario(state);
  if (!comparisonSlot) {
    comparisonSlot = current;
    field<HTMLElement>('comparison-status').textContent = 'design A pinned; adjust the form and press Compare again';
    return;
  }
  try {
    const envelope = await client.designEffect(current, comparisonSlot);
    renderDesignEffect(document, envelope.result!.design_effect);
    field<HTMLElement>('comparison-status').textContent = 'design effect of current design vs pinned design A';
  } catch (err) {
    showError(document, err instanceof Error ? err.message : String(err));
  } finally {
    comparisonSlot = null;
  }
}

let debounceTimer: ReturnType<typeof setTimeout> | undefined;

function scheduleCompute(): void {
  clearTimeout(debounceTimer);
  debounceTimer = setTimeout(() => void compute(), 250);
}

async function boot(): Promise<void> {
  writeForm(state);
  try {
    const presets = await client.presets();
    const picker = field<HTMLSelectElement>('f-preset');
    for (const name of Object.keys(presets)) {
      const option = document.createElement('option');
      option.value = name;
      option.textContent = name;
      picker.appendChild(option);
    }
    picker.addEventListener('change', () => {
      if (picker.value) {
        state = applyPreset(state, presets[picker.value]);
        writeForm(state);
        scheduleCompute();
      }
    });
  } catch {
    showError(document, 'Compute service unreachable. Start it with: panelpower serve');
  }
  for (const el of document.querySelectorAll('input, select')) {
    el.addEventListener('input', scheduleCompute);
  }
  field<HTMLButtonElement>('btn-compute').addEventListener('click', () => void compute());
  field<HTMLButtonElement>('btn-compare').addEventListener('click', () => void compare());
  field<HTMLButtonElement>('btn-export').addEventListener('click', () => {
    const s = readForm();
    if (validate(s).size === 0) downloadScenario(toScenario(s));
  });
  field<HTMLInputElement>('f-import').addEventListener('change', async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    try {
      const scenario = parseScenario(await file.text());
      applyScenarioToForm(scenario);
      scheduleCompute();
    } catch (err) {
      showError(document, `could not read scenario: ${String(err)}`);
    }
  });
  void compute();
}

function applyScenarioToForm(s: Scenario): void {
  const mt = s.design.M_T_k.reduce((a, b) => a + b, 0);
  const mc = s.design.M_C_k.reduce((a, b) => a + b, 0);
  state = {
    ...state,
    P: s.design.P,
    S: [...s.design.S],
    split: mc > 0 ? mt / (mt + mc) : 0.5,
    N: s.design.N,
    ICC_theta: s.error_model.ICC_theta,
    rho: s.error_model.rho,
    psi: s.error_model.psi,
    corr_structure: s.error_model.corr_structure,
    design_kind: s.error_model.design_kind,
    family: s.estimator.family,
    estimandKind: s.estimator.estimand.kind,
    l: s.estimator.estimand.l ?? state.l,
    q: s.estimator.estimand.q ?? state.q,
    alpha: s.query.alpha,
    lambda: s.query.lambda,
    mde: s.query.mde ?? state.mde,
    useCovariates: !!s.estimator.covariates,
    R2_YX: s.estimator.covariates?.R2_YX ?? 0,
    R2_TX: s.estimator.covariates?.R2_TX ?? 0,
    v: s.estimator.covariates?.v ?? 0,
  };
  writeForm(state);
}

if (typeof document !== 'undefined' && document.getElementById('app-root')) {
  void boot();
}

export { applyScenarioToForm, boot, compute, readForm, writeForm };
