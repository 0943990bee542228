#!/usr/bin/env python3
"""Build the two-trajectory demo scene in data/.

Three small tilted panels sit at fixed reflection points inside a
20 x 15 x 7 m shell. Their orientations and the TX/RX positions are solved so
that

    TX1 -> rp1 -> rp2 -> RX   hits at 7.9 and 7.2 degrees
    TX2 -> rp1 -> rp3 -> RX   hits at 67.1 and 25 degrees

Outputs data/demo_scene.json and data/demo_measurements.csv. Deterministic.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"

RP1 = np.array([2.02, 0.5, 3.95])   # glass
RP2 = np.array([2.04, -7.5, 3.02])  # plaster
RP3 = np.array([5.49, -1.01, 3.06])  # wood

THETA = {"t1": (7.9, 7.2), "t2": (67.1, 25.0)}


def unit(v):
    return v / np.linalg.norm(v)


def reflect(d, n):
    return d - 2.0 * np.dot(d, n) * n


def angle_deg(a, b):
    return math.degrees(math.acos(np.clip(abs(np.dot(unit(a), unit(b))), -1.0, 1.0)))


def normal_between(a, b, theta_a, theta_b):
    """Unit n with angle(n, a) = theta_a and angle(n, b) = theta_b (radians)."""
    a, b = unit(a), unit(b)
    c = np.cross(a, b)
    c /= np.linalg.norm(c)
    # n = x a + y b + z c with n.a = cos ta, n.b = cos tb.
    ab = np.dot(a, b)
    m = np.array([[1.0, ab], [ab, 1.0]])
    x, y = np.linalg.solve(m, [math.cos(theta_a), math.cos(theta_b)])
    rest = 1.0 - (x * x + y * y + 2 * x * y * ab)
    z = math.sqrt(rest)
    return [unit(x * a + y * b + s * z * c) for s in (1.0, -1.0)]


def panel(pid, centre, normal, material, half=0.25, thickness=0.05):
    n = unit(normal)
    helper = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = unit(np.cross(helper, n))
    v = np.cross(n, u)
    verts = [centre + half * (su * u + sv * v) for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1))]
    return {"id": pid, "vertices": [[round(float(c), 9) for c in p] for p in verts],
            "material": material, "thickness_m": thickness}


def box_face(pid, corners, material, thickness):
    return {"id": pid, "vertices": [list(map(float, c)) for c in corners],
            "material": material, "thickness_m": thickness}


def main():
    d12 = unit(RP2 - RP1)
    d13 = unit(RP3 - RP1)

    # rp1: both outgoing legs leave the same face at the prescribed angles.
    n1 = normal_between(d12, d13, math.radians(THETA["t1"][0]), math.radians(THETA["t2"][0]))[0]

    # rp2: closest orientation to the wall normal (+y) on the 7.2 degree cone around -d12.
    axis = -d12
    e1 = unit(np.cross(axis, [1.0, 0.0, 0.0]))
    e2 = np.cross(axis, e1)
    t2 = math.radians(THETA["t1"][1])
    phis = np.linspace(0.0, 2.0 * math.pi, 7201)
    cands = [math.cos(t2) * axis + math.sin(t2) * (math.cos(p) * e1 + math.sin(p) * e2) for p in phis]
    n2 = unit(max(cands, key=lambda n: n[1]))
    r2 = reflect(d12, n2)

    # rx on the rp2 ray such that the specular turn at rp3 is 2 * 25 degrees.
    def turn_error(s):
        rx = RP2 + s * r2
        return angle_deg(-d13, rx - RP3) - 2.0 * THETA["t2"][1]

    grid = np.linspace(0.5, 14.0, 541)
    vals = [turn_error(s) for s in grid]
    roots = [brentq(turn_error, grid[i], grid[i + 1], xtol=1e-14)
             for i in range(len(grid) - 1) if vals[i] * vals[i + 1] < 0]
    rx = None
    for s in roots:
        p = RP2 + s * r2
        if -9.5 < p[0] < 9.5 and -7.0 < p[1] < 7.0 and 0.5 < p[2] < 6.5:
            rx = p
            break
    if rx is None:
        raise SystemExit("no receiver position inside the shell")
    n3 = unit(unit(rx - RP3) - d13)

    # Transmitters back along the mirrored incoming rays.
    def tx_for(d_out, dist):
        d_in = reflect(d_out, n1)
        return RP1 - dist * d_in

    tx1 = tx_for(d12, 2.5)
    tx2 = tx_for(d13, 2.5)

    for name, v in (("tx1", tx1), ("tx2", tx2), ("rx", rx)):
        if not (-10 < v[0] < 10 and -7.5 < v[1] < 7.5 and 0 < v[2] < 7):
            raise SystemExit(f"{name} outside the shell: {v}")

    facets = [
        panel("rp1_railing", RP1, n1, "glass"),
        panel("rp2_wall", RP2, n2, "plaster"),
        panel("rp3_door", RP3, n3, "wood"),
    ]
    x0, x1, y0, y1, z0, z1 = -10.0, 10.0, -7.5, 7.5, 0.0, 7.0
    facets += [
        box_face("floor", [[x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0]], "wood", 0.2),
        box_face("ceiling", [[x0, y0, z1], [x0, y1, z1], [x1, y1, z1], [x1, y0, z1]], "plaster", 0.2),
        box_face("wall_south", [[x0, y0, z0], [x0, y0, z1], [x1, y0, z1], [x1, y0, z0]], "plaster", 0.2),
        box_face("wall_north", [[x0, y1, z0], [x1, y1, z0], [x1, y1, z1], [x0, y1, z1]], "plaster", 0.2),
        box_face("wall_west", [[x0, y0, z0], [x0, y1, z0], [x0, y1, z1], [x0, y0, z1]], "plaster", 0.2),
        box_face("wall_east", [[x1, y0, z0], [x1, y0, z1], [x1, y1, z1], [x1, y1, z0]], "plaster", 0.2),
    ]

    scene = {
        "units": "m",
        "bounds": {"min": [x0 - 0.5, y0 - 0.5, z0 - 0.5], "max": [x1 + 0.5, y1 + 0.5, z1 + 0.5]},
        "transmitters": [[round(float(c), 9) for c in tx1], [round(float(c), 9) for c in tx2]],
        "receivers": [[round(float(c), 9) for c in rx]],
        "facets": facets,
    }
    DATA.mkdir(exist_ok=True)
    (DATA / "demo_scene.json").write_text(json.dumps(scene, indent=2) + "\n")

    (DATA / "demo_measurements.csv").write_text(
        "# measured total reflection loss for the two demo trajectories\n"
        "trajectory_id,measured_rl_db,u_db\n"
        "tx0:rx0:rp1_railing>rp2_wall,19,1\n"
        "tx1:rx0:rp1_railing>rp3_door,21.5,1\n"
    )

    print("n1", n1, "n2", n2, "n3", n3)
    print("tx1", tx1, "tx2", tx2, "rx", rx)
    print("check t1", angle_deg(d12, n1), angle_deg(-d12, n2))
    print("check t2", angle_deg(d13, n1), angle_deg(-d13, n3))


if __name__ == "__main__":
    main()
