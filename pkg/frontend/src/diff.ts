import type { DecisionPacket } from "./schema";

export interface PacketDiff {
  changedFields: string[];
  tierChanged: boolean;
  actionChanged: boolean;
  probabilityDeltas: number[] | null;
  empty: boolean;
}

/** Field- and outcome-level differences between two decision packets. */
export function packetDiff(base: DecisionPacket, edited: DecisionPacket): PacketDiff {
  const changedFields: string[] = [];
  for (const name of Object.keys(base.state)) {
    if (base.state[name] !== edited.state[name]) changedFields.push(name);
  }
  for (const name of Object.keys(edited.state)) {
    if (!(name in base.state)) changedFields.push(name);
  }
  const tierChanged = base.tier !== edited.tier;
  const actionChanged = base.action !== edited.action;
  let probabilityDeltas: number[] | null = null;
  if (base.probabilities && edited.probabilities) {
    probabilityDeltas = edited.probabilities.map(
      (p, i) => p - (base.probabilities as number[])[i],
    );
  }
  const empty =
    changedFields.length === 0 &&
    !tierChanged &&
    !actionChanged &&
    (probabilityDeltas === null || probabilityDeltas.every((d) => d === 0));
  return { changedFields, tierChanged, actionChanged, probabilityDeltas, empty };
}
