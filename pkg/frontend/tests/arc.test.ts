// Arc math must match the daemon's kinematics bit-for-bit at the sampled
// points; expected values were frozen from the backend implementation
// (which the backend's own acceptance suite pins to independent oracles).
import { describe, expect, it } from "vitest";

import {
  arcChain,
  arcDisplacement,
  distance,
  fingerPolyline,
  fingertip,
} from "../src/geometry.js";
import type { Vec3 } from "../src/protocol.js";
import { DOF_IDS } from "../src/protocol.js";
import { defaultFingers, zeroAngles } from "./fixtures.js";

describe("arcDisplacement", () => {
  it("half turn is the arc diameter", () => {
    const [lat, alo] = arcDisplacement(90, 180);
    expect(lat).toBeCloseTo((2 * 90) / Math.PI, 9);
    expect(Math.abs(alo)).toBeLessThan(1e-9);
  });

  it("quarter turn matches the frozen backend value", () => {
    const [lat, alo] = arcDisplacement(90, 90);
    expect(lat).toBeCloseTo(57.295779513082316, 9);
    expect(alo).toBeCloseTo(57.29577951308232, 9);
  });

  it("is continuous at zero bend", () => {
    const [lat0, alo0] = arcDisplacement(100, 0);
    const [lat1, alo1] = arcDisplacement(100, 1e-6);
    expect(Math.hypot(lat1 - lat0, alo1 - alo0)).toBeLessThan(1e-3);
  });
});

describe("arcChain", () => {
  it("matches the frozen two-segment chain", () => {
    const chain = arcChain([
      [45, 60],
      [45, 90],
    ]);
    expect(chain[0][0]).toBeCloseTo(21.485917317405868, 9);
    expect(chain[0][1]).toBeCloseTo(37.214700440970965, 9);
    expect(chain[1][0]).toBeCloseTo(60.61966248965709, 9);
    expect(chain[1][1]).toBeCloseTo(26.72884502526091, 9);
  });
});

describe("fingerPolyline", () => {
  const fingers = defaultFingers();

  it("zero state ends at the straight-finger tips", () => {
    const angles = zeroAngles();
    expect(fingertip("index", fingers.index, angles)).toEqual([27, 95 + 90, 0]);
    const thumbTip = fingertip("thumb", fingers.thumb, angles);
    expect(thumbTip[0]).toBeCloseTo(126.26488874308758, 9);
    expect(thumbTip[1]).toBeCloseTo(115.70663706551932, 9);
    expect(Math.abs(thumbTip[2])).toBeLessThan(1e-9);
  });

  it("zero state polylines are straight lines", () => {
    const angles = zeroAngles();
    const line = fingerPolyline("index", fingers.index, angles, 8);
    const root = line[0];
    const tip = line[line.length - 1];
    const len = distance(root, tip);
    for (const point of line) {
      // collinearity: distance along the segment equals distance to root
      const t = distance(root, point) / len;
      const interp: Vec3 = [
        root[0] + t * (tip[0] - root[0]),
        root[1] + t * (tip[1] - root[1]),
        root[2] + t * (tip[2] - root[2]),
      ];
      expect(distance(point, interp)).toBeLessThan(1e-9);
    }
  });

  it("pinch angles reproduce the frozen tips and near-contact", () => {
    const angles = zeroAngles();
    angles.index_mcp_flex = 100;
    angles.index_dippip_flex = 70;
    angles.thumb_mcp_flex = 20;
    angles.thumb_ip_flex = 160;
    angles.thumb_cmc_oppose = 75;
    const indexTip = fingertip("index", fingers.index, angles);
    const thumbTip = fingertip("thumb", fingers.thumb, angles);
    expect(indexTip[0]).toBeCloseTo(27.0, 9);
    expect(indexTip[1]).toBeCloseTo(90.51395600212864, 9);
    expect(indexTip[2]).toBeCloseTo(-60.13773078967495, 9);
    expect(thumbTip[0]).toBeCloseTo(26.556540808248116, 9);
    expect(thumbTip[1]).toBeCloseTo(89.9995362819906, 9);
    expect(thumbTip[2]).toBeCloseTo(-59.65822511611721, 9);
    expect(distance(indexTip, thumbTip)).toBeLessThan(5);
  });

  it("spread plus flexion matches the frozen backend tip", () => {
    const angles = zeroAngles();
    angles.spread_1 = 30;
    angles.index_mcp_flex = 45;
    const tip = fingertip("index", fingers.index, angles);
    expect(tip[0]).toBeCloseTo(63.16701969023221, 9);
    expect(tip[1]).toBeCloseTo(157.6431156618262, 9);
    expect(tip[2]).toBeCloseTo(-48.601350439407184, 9);
  });

  it("full fist closes each finger back onto its root", () => {
    const angles = zeroAngles();
    for (const dof of DOF_IDS) {
      if (dof.endsWith("_flex")) angles[dof] = 180;
    }
    const tip = fingertip("index", defaultFingers().index, angles);
    expect(distance(tip, [27, 95, 0])).toBeLessThan(1e-9);
  });

  it("never reaches beyond the total link length", () => {
    // deterministic pseudo-random sweep
    let seed = 42;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2 ** 31;
      return seed / 2 ** 31;
    };
    const fingersCfg = defaultFingers();
    for (let i = 0; i < 200; i++) {
      const angles = zeroAngles();
      for (const dof of DOF_IDS) {
        const limit = dof.includes("spread") ? 30 : dof === "thumb_cmc_oppose" ? 90 : 180;
        angles[dof] = rand() * limit;
      }
      for (const finger of ["thumb", "index", "middle", "ring", "pinky"] as const) {
        const cfg = fingersCfg[finger];
        const reach = cfg.metacarpal_mm + cfg.proximal_mm + cfg.distal_mm;
        const tip = fingertip(finger, cfg, angles);
        expect(distance(tip, cfg.root_pos)).toBeLessThanOrEqual(reach + 1e-9);
      }
    }
  });
});
