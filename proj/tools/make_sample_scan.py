#!/usr/bin/env python3
# Copyright 2026 The pcsa Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes a synthetic KITTI-style velodyne scan (float32 x, y, z, intensity).

The scene is a flat road with two walls, a few parked boxes and some clutter,
seen from a sensor 1.73 m above the ground. Output is fully determined by the
seed.
"""

import argparse
import pathlib

import numpy as np

SENSOR_HEIGHT = 1.73


def ground(rng, n):
    # Range sampled with a 1/r falloff like a spinning lidar.
    r = np.exp(rng.uniform(np.log(3.0), np.log(70.0), n))
    az = rng.uniform(-np.pi / 4, np.pi / 4, n)
    z = -SENSOR_HEIGHT + rng.normal(0.0, 0.02, n)
    return np.stack([r * np.cos(az), r * np.sin(az), z, rng.uniform(0.05, 0.3, n)], 1)


def wall(rng, n, y, x0, x1):
    x = rng.uniform(x0, x1, n)
    z = rng.uniform(-SENSOR_HEIGHT, 1.0, n)
    return np.stack([x, np.full(n, y) + rng.normal(0, 0.03, n), z, rng.uniform(0.2, 0.6, n)], 1)


def box(rng, n, cx, cy, yaw, length=4.0, width=1.7, height=1.5):
    # Points on the two faces visible from the origin.
    u = rng.uniform(-0.5, 0.5, n)
    side = rng.integers(0, 2, n)
    lx = np.where(side == 0, u * length, -0.5 * length)
    ly = np.where(side == 0, -0.5 * width * np.sign(cy + 1e-9), u * width)
    z = -SENSOR_HEIGHT + rng.uniform(0.0, height, n)
    c, s = np.cos(yaw), np.sin(yaw)
    x = cx + c * lx - s * ly
    y = cy + s * lx + c * ly
    return np.stack([x, y, z, rng.uniform(0.3, 0.9, n)], 1)


def clutter(rng, n):
    x = rng.uniform(5.0, 65.0, n)
    y = rng.uniform(-30.0, 30.0, n)
    z = rng.uniform(-SENSOR_HEIGHT, 0.5, n)
    return np.stack([x, y, z, rng.uniform(0.0, 1.0, n)], 1)


def make_scan(seed, points):
    rng = np.random.default_rng(seed)
    parts = [
        wall(rng, points // 10, 9.0, 4.0, 60.0),
        wall(rng, points // 10, -11.0, 4.0, 60.0),
    ]
    for cx, cy, yaw in [(12.0, -3.5, 0.05), (20.0, 3.0, -0.1), (31.0, -4.0, 0.2),
                        (45.0, 2.5, 0.0), (58.0, -6.0, 1.2)]:
        parts.append(box(rng, points // 40, cx, cy, yaw))
    parts.append(clutter(rng, points // 20))
    used = sum(len(p) for p in parts)
    parts.insert(0, ground(rng, points - used))
    scan = np.concatenate(parts).astype("<f4")
    return scan[rng.permutation(len(scan))]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data/sample_scan.bin"))
    args = ap.parse_args()
    scan = make_scan(args.seed, args.points)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    scan.tofile(args.out)
    print(f"wrote {len(scan)} points to {args.out}")


if __name__ == "__main__":
    main()
