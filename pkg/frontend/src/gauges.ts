// Pressure gauge rows: one per valve channel, labeled with the DoF the
// configured channel map assigns to it. Values come straight from the
// broadcast; nothing is recomputed client-side.

import type { ConfigMessage, DofId, StateFrame } from "./protocol.js";

export const GAUGE_FULL_SCALE_MBAR = 2500;

export interface GaugeRow {
  channel: number;
  dof: DofId | null;
  commanded: number;
  actual: number;
  commandedFraction: number;
  actualFraction: number;
}

export function gaugeRows(config: ConfigMessage, state: StateFrame): GaugeRow[] {
  const byChannel = new Map<number, DofId>();
  for (const [dof, channel] of Object.entries(config.channel_map)) {
    byChannel.set(channel, dof as DofId);
  }
  const rows: GaugeRow[] = [];
  for (let channel = 0; channel < 16; channel++) {
    const commanded = state.commanded[channel];
    const actual = state.actual[channel];
    rows.push({
      channel,
      dof: byChannel.get(channel) ?? null,
      commanded,
      actual,
      commandedFraction: commanded / GAUGE_FULL_SCALE_MBAR,
      actualFraction: actual / GAUGE_FULL_SCALE_MBAR,
    });
  }
  return rows;
}
