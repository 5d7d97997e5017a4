/** Typed client for the compute service's /v1 wire contract.
 *
 * The dashboard performs no statistical computation: every number shown in
 * the UI is lifted verbatim from one of these responses.
 */

export interface DesignPayload {
  P: number;
  S: number[];
  M_T_k: number[];
  M_C_k: number[];
  N: number;
  times?: number[];
}

export interface ErrorModelPayload {
  ICC_theta: number;
  rho: number;
  corr_structure: 'AR1' | 'CONSTANT';
  design_kind: 'CROSS_SECTIONAL' | 'LONGITUDINAL';
  psi: number;
}

export interface EstimandPayload {
  kind: 'POOLED' | 'EXPOSURE' | 'CALENDAR';
  l?: number;
  q?: number;
}

export interface EstimatorPayload {
  family: string;
  estimand: EstimandPayload;
  covariates?: { R2_YX: number; R2_TX: number; v: number };
}

export interface QueryPayload {
  alpha: number;
  lambda: number;
  mde?: number;
}

export interface Scenario {
  design: DesignPayload;
  error_model: ErrorModelPayload;
  estimator: EstimatorPayload;
  query: QueryPayload;
}

export interface ApiError {
  code: string;
  message: string;
  field: string | null;
}

export interface Envelope<T> {
  request: unknown;
  result: T | null;
  error: ApiError | null;
  warnings: string[];
}

export interface VarianceBreakdown {
  total: number;
  per_group: number[];
  weights: number[];
  terms: Record<string, number | boolean>[];
}

export interface PowerResult {
  df: number;
  factor: number;
  variance: VarianceBreakdown;
  mde?: number;
  M?: number;
  m_continuous?: number;
  achieved_mde?: number;
  allocation?: { M_T_k: number[]; M_C_k?: number[] };
  warnings: string[];
}

export interface GridRow {
  [key: string]: number | string | undefined;
}

export class ServiceUnavailableError extends Error {
  constructor(cause: unknown) {
    super(`compute service unreachable: ${String(cause)}`);
    this.name = 'ServiceUnavailableError';
  }
}

export class ApiRequestError extends Error {
  readonly detail: ApiError;
  constructor(detail: ApiError) {
    super(`${detail.code}: ${detail.message}`);
    this.name = 'ApiRequestError';
    this.detail = detail;
  }
}

async function post<T>(base: string, path: string, body: unknown): Promise<Envelope<T>> {
  let response: Response;
  try {
    response = await fetch(`${base}${path}`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
  } catch (err) {
    throw new ServiceUnavailableError(err);
  }
  const envelope = (await response.json()) as Envelope<T>;
  if (envelope.error) {
    throw new ApiRequestError(envelope.error);
  }
  return envelope;
}

export class PanelPowerClient {
  constructor(readonly base: string = '') {}

  async health(): Promise<{ status: string; version: string }> {
    let response: Response;
    try {
      response = await fetch(`${this.base}/v1/health`);
    } catch (err) {
      throw new ServiceUnavailableError(err);
    }
    return response.json();
  }

  async presets(): Promise<Record<string, Record<string, unknown>>> {
    let response: Response;
    try {
      response = await fetch(`${this.base}/v1/presets`);
    } catch (err) {
      throw new ServiceUnavailableError(err);
    }
    return (await response.json()).presets;
  }

  clusters(scenario: Scenario): Promise<Envelope<PowerResult>> {
    return post<PowerResult>(this.base, '/v1/clusters', scenario);
  }

  mde(scenario: Scenario): Promise<Envelope<PowerResult>> {
    return post<PowerResult>(this.base, '/v1/mde', scenario);
  }

  variance(scenario: Scenario): Promise<Envelope<VarianceBreakdown>> {
    return post<VarianceBreakdown>(this.base, '/v1/variance', scenario);
  }

  designEffect(a: Scenario, b: Scenario): Promise<Envelope<{ design_effect: number }>> {
    return post<{ design_effect: number }>(this.base, '/v1/design-effect', {
      design_a: a.design,
      error_model_a: a.error_model,
      design_b: b.design,
      error_model_b: b.error_model,
      estimator: a.estimator,
      query: a.query,
    });
  }

  grid(
    scenario: Scenario,
    parameter: string,
    values: number[],
    target: 'clusters' | 'mde',
  ): Promise<Envelope<{ rows: GridRow[] }>> {
    return post<{ rows: GridRow[] }>(this.base, '/v1/grid', {
      ...scenario,
      sweep: { parameter, values },
      target,
    });
  }
}
