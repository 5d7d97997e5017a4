/** Scenario export/import; the JSON shape is exactly what the CLI's
 * --design-file flag accepts, so a saved exploration reruns bit-identically
 * offline. */

import type { Scenario } from './api';

export function scenarioJson(scenario: Scenario): string {
  return JSON.stringify(scenario, null, 2);
}

export function parseScenario(text: string): Scenario {
  const raw = JSON.parse(text);
  for (const key of ['design', 'error_model', 'estimator', 'query']) {
    if (!(key in raw)) {
      throw new Error(`scenario file is missing "${key}"`);
    }
  }
  return raw as Scenario;
}

export function downloadScenario(scenario: Scenario, filename = 'scenario.json'): void {
  const blob = new Blob([scenarioJson(scenario)], { type: 'application/json' });
  const url = URL.createObjectURL(blob);
  const a = document.createElement('a');
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}
