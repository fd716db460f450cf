// Thin fetch client for the service. Every screen goes through this module;
// nothing else in the UI talks to the network.

import type {
  CatalogPayload,
  ChronicleResponse,
  EventRecord,
  HeatmapPayload,
  HypothesisDoc,
  LogResponse,
  RecommendationPayload,
  RecommendationRequestDoc,
  VerifiedRulePayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    public userId: string,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await fetch(this.baseUrl + path, init);
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ApiError(
        payload?.code ?? "error",
        payload?.message ?? response.statusText,
        response.status,
      );
    }
    return payload as T;
  }

  logEvent(record: EventRecord, enrichNow = true): Promise<LogResponse> {
    const query = enrichNow ? "?enrich=now" : "";
    return this.request("POST", `/v1/users/${this.userId}/events${query}`, record);
  }

  rateEvent(eventId: string, rating: number): Promise<LogResponse> {
    return this.request("POST", `/v1/users/${this.userId}/events/${eventId}/rating`, {
      rating,
    });
  }

  chronicle(): Promise<ChronicleResponse> {
    return this.request("GET", `/v1/users/${this.userId}/chronicle`);
  }

  heatmap(a: string, b: string, windowMinutes: number): Promise<HeatmapPayload> {
    const params = new URLSearchParams({
      a,
      b,
      window: String(windowMinutes),
    });
    return this.request("GET", `/v1/users/${this.userId}/heatmap?${params}`);
  }

  verify(hypothesis: HypothesisDoc): Promise<VerifiedRulePayload> {
    return this.request("POST", `/v1/users/${this.userId}/hypotheses/verify`, hypothesis);
  }

  catalog(): Promise<CatalogPayload> {
    return this.request("GET", "/v1/catalog");
  }

  recommend(request: RecommendationRequestDoc): Promise<RecommendationPayload> {
    return this.request("POST", `/v1/users/${this.userId}/recommendations`, request);
  }

  buildModel(): Promise<unknown> {
    return this.request("POST", `/v1/users/${this.userId}/model/build?wait=true`);
  }

  modelStatus(): Promise<{ status: string }> {
    return this.request("GET", `/v1/users/${this.userId}/model`);
  }
}
