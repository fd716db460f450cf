// Per-tab session state. Mirrors server state only through API responses:
// nothing here derives or caches a score the server did not send.

import type { ApiClient } from "./api.js";
import type { RecommendationPayload } from "./types.js";

export interface SelectedCell {
  row: string;
  col: string;
  count: number;
  axisA: string;
  axisB: string;
}

export class SessionState {
  pendingEventId: string | null = null;
  lastRecommendation: RecommendationPayload | null = null;
  selectedCell: SelectedCell | null = null;

  constructor(
    public api: ApiClient,
    // injectable so tests pin ids and timestamps
    public makeId: () => string = defaultId,
    public now: () => number = () => Date.now(),
  ) {}
}

let counter = 0;

function defaultId(): string {
  counter += 1;
  return `ui-${Date.now().toString(36)}-${counter.toString(36)}`;
}
