/** Form state and client-side range validation.
 *
 * The ranges gate submission only; the service re-validates everything.
 */

import type { Scenario } from './api';

export interface FormState {
  P: number;
  S: number[];
  split: number; // treatment share of total clusters
  N: number;
  ICC_theta: number;
  rho: number;
  psi: number;
  corr_structure: 'AR1' | 'CONSTANT';
  design_kind: 'CROSS_SECTIONAL' | 'LONGITUDINAL';
  family: string;
  estimandKind: 'POOLED' | 'EXPOSURE' | 'CALENDAR';
  l: number;
  q: number;
  alpha: number;
  lambda: number;
  mde: number;
  useCovariates: boolean;
  R2_YX: number;
  R2_TX: number;
  v: number;
}

export const DEFAULT_STATE: FormState = {
  P: 8,
  S: [4, 6],
  split: 0.5,
  N: 100,
  ICC_theta: 0.05,
  rho: 0.4,
  psi: 0.0,
  corr_structure: 'AR1',
  design_kind: 'CROSS_SECTIONAL',
  family: 'DID',
  estimandKind: 'POOLED',
  l: 1,
  q: 8,
  alpha: 0.05,
  lambda: 0.8,
  mde: 0.2,
  useCovariates: false,
  R2_YX: 0,
  R2_TX: 0,
  v: 0,
};

const FAMILIES = [
  'DID',
  'CITS_FULL',
  'CITS_DISCRETE',
  'CITS_COMMON_SLOPES',
  'ITS_FULL',
  'ITS_DISCRETE',
  'ITS_COMMON_SLOPES',
];

export function isIts(family: string): boolean {
  return family.startsWith('ITS');
}

/** Per-field validation messages; an empty map means the form may submit. */
export function validate(state: FormState): Map<string, string> {
  const errors = new Map<string, string>();
  const trendFamily = state.family !== 'DID';
  if (!Number.isInteger(state.P) || state.P < (trendFamily ? 6 : 2)) {
    errors.set('P', trendFamily ? 'trend estimators need at least 6 periods' : 'need at least 2 periods');
  }
  if (!FAMILIES.includes(state.family)) {
    errors.set('family', `unknown family ${state.family}`);
  }
  if (state.S.length === 0) {
    errors.set('S', 'need at least one start period');
  }
  for (let i = 1; i < state.S.length; i++) {
    if (state.S[i] <= state.S[i - 1]) {
      errors.set('S', 'start periods must be strictly increasing');
    }
  }
  for (const s of state.S) {
    if (!Number.isInteger(s)) {
      errors.set('S', 'start periods are period labels (integers)');
    } else if (trendFamily ? s < 4 || s > state.P - 2 : s < 2 || s > state.P) {
      errors.set(
        'S',
        trendFamily
          ? `start periods must lie in [4, ${state.P - 2}] so both trends have 3+ points`
          : `start periods must lie in [2, ${state.P}]`,
      );
    }
  }
  if (!(state.N >= 1)) {
    errors.set('N', 'need at least one individual per cell');
  }
  if (!(state.ICC_theta >= 0 && state.ICC_theta < 1)) {
    errors.set('ICC_theta', 'intraclass correlation must lie in [0, 1)');
  }
  if (!(Math.abs(state.rho) < 1)) {
    errors.set('rho', 'autocorrelation must satisfy |rho| < 1');
  }
  if (state.design_kind === 'LONGITUDINAL' && !(Math.abs(state.psi) < 1)) {
    errors.set('psi', 'individual autocorrelation must satisfy |psi| < 1');
  }
  if (!(state.split > 0 && state.split < 1) && !isIts(state.family)) {
    errors.set('split', 'treatment share must lie strictly inside (0, 1)');
  }
  if (!(state.alpha > 0 && state.alpha < 1)) {
    errors.set('alpha', 'alpha must lie in (0, 1)');
  }
  if (!(state.lambda > 0 && state.lambda < 1)) {
    errors.set('lambda', 'power must lie in (0, 1)');
  }
  if (!(state.mde > 0)) {
    errors.set('mde', 'target effect must be positive');
  }
  if (state.estimandKind === 'EXPOSURE') {
    const maxA = Math.max(...state.S.map((s) => state.P - s + 1));
    if (!Number.isInteger(state.l) || state.l < 1 || state.l > maxA) {
      errors.set('l', `exposure offset must lie in [1, ${maxA}]`);
    }
  }
  if (state.estimandKind === 'CALENDAR') {
    const minS = Math.min(...state.S);
    if (!Number.isInteger(state.q) || state.q < minS || state.q > state.P) {
      errors.set('q', `calendar period must lie in [${minS}, ${state.P}]`);
    }
  }
  if (state.useCovariates) {
    if (!(state.R2_YX >= 0 && state.R2_YX < 1)) errors.set('R2_YX', 'R² must lie in [0, 1)');
    if (!(state.R2_TX >= 0 && state.R2_TX < 1)) errors.set('R2_TX', 'R² must lie in [0, 1)');
    if (!Number.isInteger(state.v) || state.v < 0) errors.set('v', 'covariate count must be a non-negative integer');
  }
  return errors;
}

/** Serialize the form to the wire scenario (shares as fractional counts). */
export function toScenario(state: FormState): Scenario {
  const K = state.S.length;
  const its = isIts(state.family);
  const mt = state.S.map(() => (its ? 1 / K : state.split / K));
  const mc = state.S.map(() => (its ? 0 : (1 - state.split) / K));
  return {
    design: { P: state.P, S: [...state.S], M_T_k: mt, M_C_k: mc, N: state.N },
    error_model: {
      ICC_theta: state.ICC_theta,
      rho: state.rho,
      corr_structure: state.corr_structure,
      design_kind: state.design_kind,
      psi: state.design_kind === 'LONGITUDINAL' ? state.psi : 0,
    },
    estimator: {
      family: state.family,
      estimand:
        state.estimandKind === 'POOLED'
          ? { kind: 'POOLED' }
          : state.estimandKind === 'EXPOSURE'
            ? { kind: 'EXPOSURE', l: state.l }
            : { kind: 'CALENDAR', q: state.q },
      ...(state.useCovariates
        ? { covariates: { R2_YX: state.R2_YX, R2_TX: state.R2_TX, v: state.v } }
        : {}),
    },
    query: { alpha: state.alpha, lambda: state.lambda, mde: state.mde },
  };
}

/** Apply a named preset from the service onto the form defaults. */
export function applyPreset(state: FormState, preset: Record<string, unknown>): FormState {
  return {
    ...state,
    P: (preset.P as number) ?? state.P,
    S: [...((preset.S as number[]) ?? state.S)],
    split: (preset.split as number) ?? state.split,
    N: (preset.N as number) ?? state.N,
    ICC_theta: (preset.ICC_theta as number) ?? state.ICC_theta,
    rho: (preset.rho as number) ?? state.rho,
    corr_structure: (preset.corr_structure as FormState['corr_structure']) ?? state.corr_structure,
    design_kind: (preset.design_kind as FormState['design_kind']) ?? state.design_kind,
    alpha: (preset.alpha as number) ?? state.alpha,
    lambda: (preset.lambda as number) ?? state.lambda,
    mde: (preset.mde as number) ?? state.mde,
  };
}
