import { z } from "zod";

export const DecisionPacket = z.object({
  tier: z.enum(["Low", "Intermediate", "High"]),
  cluster_id: z.number().int(),
  is_noise: z.boolean(),
  state: z.record(z.string(), z.number()),
  advisory: z.string().nullable(),
  action: z.number().int().min(0).max(3).nullable(),
  action_name: z.string().nullable(),
  source: z.string(),
  p_fluid: z.number().min(0).max(1).nullable(),
  p_vaso: z.number().min(0).max(1).nullable(),
  probabilities: z.array(z.number()).length(4).nullable(),
  attention_weights: z.array(z.number()).length(30).nullable(),
  rationale: z.string().nullable(),
  chunk_ids: z.array(z.string()),
  timings: z.record(z.string(), z.number()).optional(),
});
export type DecisionPacket = z.infer<typeof DecisionPacket>;

export const ClusterRow = z.object({
  cluster: z.number().int(),
  mortality_pct: z.number(),
  patients: z.number().int(),
  risk_category: z.enum(["Low", "Intermediate", "High"]),
});
export type ClusterRow = z.infer<typeof ClusterRow>;

export const ClustersResponse = z.object({ clusters: z.array(ClusterRow) });

export const HealthResponse = z.object({
  status: z.string(),
  stages: z.record(z.string(), z.string().nullable()),
});

export const ValidationErrorBody = z.object({
  error: z.string(),
  fields: z.record(z.string(), z.string()),
});

export const AttentionResponse = z.object({
  episode_id: z.string(),
  times: z.array(z.number()),
  features: z.array(z.string()),
  weights: z.array(z.array(z.number())),
});
export type AttentionResponse = z.infer<typeof AttentionResponse>;
