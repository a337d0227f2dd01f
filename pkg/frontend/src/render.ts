import { FEATURES } from "./features";
import type { PacketDiff } from "./diff";
import type { DecisionPacket } from "./schema";

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

/** Bar model for the attention chart: heights equal packet weights exactly. */
export function attentionBars(
  packet: DecisionPacket,
): { feature: string; weight: number }[] {
  if (!packet.attention_weights) return [];
  return packet.attention_weights.map((w, i) => ({
    feature: FEATURES[i].name,
    weight: w,
  }));
}

export function probabilitySum(packet: DecisionPacket): number | null {
  if (!packet.probabilities) return null;
  return packet.probabilities.reduce((a, b) => a + b, 0);
}

export function renderPacket(packet: DecisionPacket): string {
  const parts: string[] = [];
  parts.push(`<span class="tier-badge tier-${packet.tier.toLowerCase()}">${packet.tier}</span>`);
  if (packet.is_noise) parts.push(`<span class="noise-flag">outside known clusters</span>`);
  if (packet.advisory !== null) {
    parts.push(`<p class="advisory">${esc(packet.advisory)}</p>`);
    return parts.join("\n");
  }
  parts.push(
    `<div class="action-card">` +
      `<strong>${esc(packet.action_name ?? "")}</strong>` +
      `<span class="source-branch">${esc(packet.source)}</span>` +
      `</div>`,
  );
  if (packet.probabilities) {
    const bars = packet.probabilities
      .map((p, i) => `<div class="prob-bar" data-action="${i}" data-value="${p}"></div>`)
      .join("");
    const sum = probabilitySum(packet) as number;
    parts.push(`<div class="prob-bars">${bars}</div>`);
    parts.push(`<footer class="prob-sum">probabilities sum to ${sum.toFixed(6)}</footer>`);
  }
  for (const bar of attentionBars(packet)) {
    parts.push(
      `<div class="attn-bar" data-feature="${bar.feature}" data-weight="${bar.weight}"></div>`,
    );
  }
  if (packet.rationale !== null) {
    const cites = packet.chunk_ids.map((id) => `<cite>${esc(id)}</cite>`).join(" ");
    parts.push(`<p class="rationale">${esc(packet.rationale)}</p>${cites}`);
  }
  return parts.join("\n");
}

export function renderDiff(diff: PacketDiff): string {
  if (diff.empty) return `<p class="diff-empty">No changes</p>`;
  const items: string[] = diff.changedFields.map(
    (f) => `<li class="diff-field" data-field="${f}">${f}</li>`,
  );
  if (diff.tierChanged) items.push(`<li class="diff-tier">tier changed</li>`);
  if (diff.actionChanged) items.push(`<li class="diff-action">action changed</li>`);
  return `<ul class="diff">${items.join("")}</ul>`;
}
