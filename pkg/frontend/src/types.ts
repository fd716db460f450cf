// Payload shapes for the JSON API (see docs/api.md in the repo root).
// The UI renders these fields verbatim; it never computes scores itself.

export interface Micronutrient {
  amount: number;
  unit: string;
}

export interface NutritionFacts {
  kcal: number;
  carb_g: number;
  protein_g: number;
  fat_g: number;
  fiber_g: number;
  sugar_g: number;
  caffeine_mg: number;
  capsaicin_scoville: number;
  micronutrients: Record<string, Micronutrient>;
}

export interface EventRecord {
  schema_version?: number;
  type: "food" | "life";
  event_id: string;
  user_id?: string;
  what?: { dish: string; ingredients: [string, number][]; total_g: number };
  when?: { eaten_at: number; logged_at: number; tz_offset_min: number };
  where?: { place?: string; lat?: number; lon?: number };
  who?: { companions: number; social?: string };
  how?: string;
  barcode?: string;
  nutrition?: NutritionFacts;
  rating?: number;
  stream?: string;
  start?: number;
  end?: number;
  attributes?: Record<string, { value: number; unit: string }>;
  [extra: string]: unknown;
}

export interface LogResponse {
  status: string;
  event: EventRecord;
  enrichment: "applied" | "unresolved" | "skipped";
}

export interface ChronicleResponse {
  user_id: string;
  events: EventRecord[];
}

export interface HeatmapPayload {
  rows: string[];
  cols: string[];
  counts: number[][];
  window_minutes: number;
  axis_a: string;
  axis_b: string;
}

export interface WhereCondition {
  attr: string;
  op: string;
  value: unknown;
}

export interface HypothesisDoc {
  name: string;
  input: { steps: { stream: string; where: WhereCondition[] }[]; max_gap_minutes: number[] };
  outcome: { stream: string; metric: string; within_hours: number };
  confounders: { name: string; kind: string; selector: string; stream?: string; metric?: string }[];
}

export interface ContextResult {
  signature: [string, string][];
  effect: number | null;
  p_value: number | null;
  adjusted_p: number | null;
  n_treated: number;
  n_control: number;
  validity: number;
  low_power: boolean;
  degenerate: boolean;
}

export interface VerifiedRulePayload {
  hypothesis: HypothesisDoc;
  contexts: ContextResult[];
  overall_direction: string;
  overall_effect: number | null;
  overall_p: number | null;
  n_treated_total: number;
  n_control_total: number;
  dropped_units: number;
}

export interface CatalogPayload {
  items: { item_id: string; name: string }[];
  dishes: { dish_id: string; ingredients: string[] }[];
}

export interface Explanation {
  metric: string;
  delta: number;
  confidence: number;
  contributing: [string, number][];
}

export interface ScoredItem {
  dish_id: string;
  total: number;
  preference: number;
  health: number;
  blocked: boolean;
  blocked_by: string[];
  explanation: Explanation[];
}

export interface RecommendationPayload {
  ranked: ScoredItem[];
  blocked: ScoredItem[];
}

export interface CandidatePick {
  dish_id: string;
  portion_g: number;
}

export interface RecommendationRequestDoc {
  context: {
    timestamp: number;
    tz_offset_min: number;
    place: string;
    confounders: Record<string, string>;
  };
  candidates: CandidatePick[];
  goals: { metric: string; direction: string; weight: number }[];
  weights: { w_pref: number; w_health: number };
}
