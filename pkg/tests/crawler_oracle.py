"""Independent scalar reimplementation of the anchored-crawler stepping rule.

This deliberately avoids the library: plain floats, per-step recursive
forward kinematics, flat ground.  It exists to freeze a golden trace for the
reference robot and to cross-check the vectorized simulator against a
second, independently written implementation of the same stepping rule.

Stepping rule (one step of size dt):
  1. advance every joint phase: phi_t = t * dt * F
  2. joint angle = max_deflection * (A * sin(phi_t + P') + O) where P' gets
     a pi shift on mirrored joints when the robot uses alternating phase
  3. planar forward kinematics: each module is a segment of length L; a
     child's base sits at anchor * L along its parent; a child's heading is
     parent heading + slot rotation + own joint angle (joints only)
  4. per module take its lowest endpoint (smaller z, ties to the base); the
     module whose lowest endpoint is deepest relative to the local terrain
     height is the anchor (first module wins ties)
  5. the anchor endpoint is treated as planted: the body translates along
     the travel axis by -(q1 - q0) * grip where q0/q1 are that same material
     endpoint's body-frame x at the previous/current angles and
     grip = 1 / (1 + slope^2) at the planted world x (flat ground: grip 1)
  6. the trace records the center of mass (mean of segment midpoints) plus
     the accumulated body translation

Run as a script to (re)generate the golden trace CSV for the two-module
reference robot (head + front joint, A=1, P=0, flat ground).
"""

from __future__ import annotations

import math
import sys

L = 0.1
MAX_DEFLECTION = math.pi / 3.0
DT = 0.05
FREQUENCY = 4.0
OFFSET = 0.0
DURATION = 30.0

# A module is a dict: parent (index or -1), anchor (0|0.5|1 along parent),
# rotation (radians), joint (None or dict with amplitude, phase, mirrored).
REFERENCE_ROBOT = [
    {"parent": -1, "anchor": 0.0, "rotation": 0.0, "joint": None},
    {"parent": 0, "anchor": 1.0, "rotation": 0.0,
     "joint": {"amplitude": 1.0, "phase": 0.0, "mirrored": False}},
]


def fk(modules, t, alternating=False):
    """Endpoint list [(bx, bz, tx, tz)] at step t, body frame."""
    phi = t * DT * FREQUENCY
    poses = []
    for mod in modules:
        if mod["parent"] < 0:
            bx, bz, heading = 0.0, 0.0, 0.0
        else:
            pbx, pbz, _, _, pheading = poses[mod["parent"]]
            bx = pbx + mod["anchor"] * L * math.cos(pheading)
            bz = pbz + mod["anchor"] * L * math.sin(pheading)
            heading = pheading + mod["rotation"]
        j = mod["joint"]
        if j is not None:
            phase = j["phase"] + (math.pi if (j["mirrored"] and alternating) else 0.0)
            heading += MAX_DEFLECTION * (j["amplitude"] * math.sin(phi + phase) + OFFSET)
        tx = bx + L * math.cos(heading)
        tz = bz + L * math.sin(heading)
        poses.append((bx, bz, tx, tz, heading))
    return [(bx, bz, tx, tz) for bx, bz, tx, tz, _ in poses]


def lowest_endpoint(pose):
    bx, bz, tx, tz = pose
    if tz < bz:
        return tx, tz, "tip"
    return bx, bz, "base"


def endpoint_x(pose, which):
    return pose[2] if which == "tip" else pose[0]


def com_x(poses):
    return sum((bx + tx) / 2.0 for bx, bz, tx, tz in poses) / len(poses)


def run(modules, alternating=False, n_steps=None):
    """Trace of world-frame center-of-mass x at steps 0..n, flat ground."""
    if n_steps is None:
        n_steps = round(DURATION / DT)
    base = 0.0
    trace = [com_x(fk(modules, 0, alternating)) + base]
    for t in range(1, n_steps + 1):
        poses_now = fk(modules, t, alternating)
        poses_prev = fk(modules, t - 1, alternating)
        anchor, which, depth = -1, "base", float("inf")
        for m, pose in enumerate(poses_now):
            x, z, w = lowest_endpoint(pose)
            if z < depth:  # flat ground: depth is just z; first module wins ties
                anchor, which, depth = m, w, z
        q1 = endpoint_x(poses_now[anchor], which)
        q0 = endpoint_x(poses_prev[anchor], which)
        base -= (q1 - q0) * 1.0
        trace.append(com_x(poses_now) + base)
    return trace


def main(path):
    trace = run(REFERENCE_ROBOT)
    with open(path, "w") as fh:
        fh.write("step,com_x\n")
        for t, x in enumerate(trace):
            fh.write(f"{t},{x!r}\n")
    print(f"wrote {len(trace)} rows to {path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "golden_trace.csv")
