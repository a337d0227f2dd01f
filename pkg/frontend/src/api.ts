import {
  AttentionResponse,
  ClustersResponse,
  DecisionPacket,
  HealthResponse,
  ValidationErrorBody,
} from "./schema";
import type { ClusterRow } from "./schema";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly fields: Record<string, string> = {},
  ) {
    super(message);
  }
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async request(path: string, body?: unknown): Promise<unknown> {
    const resp = await this.fetchFn(this.baseUrl + path, body === undefined
      ? undefined
      : {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(body),
        });
    const payload = await resp.json();
    if (!resp.ok) {
      const parsed = ValidationErrorBody.safeParse(payload);
      if (parsed.success) {
        throw new ApiError(parsed.data.error, resp.status, parsed.data.fields);
      }
      throw new ApiError(`request failed (${resp.status})`, resp.status);
    }
    return payload;
  }

  async health(): Promise<{ status: string }> {
    return HealthResponse.parse(await this.request("/health"));
  }

  async clusters(): Promise<ClusterRow[]> {
    return ClustersResponse.parse(await this.request("/clusters")).clusters;
  }

  async recommend(
    state: Record<string, number>,
    force = false,
  ): Promise<DecisionPacket> {
    return DecisionPacket.parse(
      await this.request("/recommend", { state, force }),
    );
  }

  async whatif(
    states: Record<string, number>[],
    force = false,
  ): Promise<DecisionPacket[]> {
    const body = await this.request("/whatif", { states, force });
    return (body as unknown[]).map((p) => DecisionPacket.parse(p));
  }

  async attention(episodeId: string): Promise<AttentionResponse> {
    return AttentionResponse.parse(
      await this.request(`/attention/${episodeId}`),
    );
  }
}
