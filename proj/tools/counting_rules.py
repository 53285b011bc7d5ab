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
"""Writes configs/counting_rules.json.

Head, RPN and keypoint-encoder parameters are per-backbone constants. They
are derived here from explicit layer lists that follow the OpenPCDet
reference models, so every number in the rules file can be traced to layers.

Layer tuples: ("fc", c_in, c_out, bias, norm, evaluations), where norm adds a
2 * c_out affine and evaluations is how many times the layer runs per frame.
"""

import json
import pathlib
import sys


def fc(c_in, c_out, evals, bias=False, norm=True):
    return (c_in, c_out, bias, norm, evals)


def shared_mlp(chain, evals, norm=True):
    return [fc(a, b, evals, norm=norm, bias=not norm) for a, b in zip(chain, chain[1:])]


def component(name, layers, structure):
    params = 0
    macs = 0
    for c_in, c_out, bias, norm, evals in layers:
        params += c_in * c_out + (c_out if bias else 0) + (2 * c_out if norm else 0)
        macs += c_in * c_out * evals
    return {"name": name, "params": params, "macs": macs, "structure": structure}


def anchor_head(c_in, positions):
    layers = [fc(c_in, 18, positions, bias=True, norm=False),
              fc(c_in, 42, positions, bias=True, norm=False),
              fc(c_in, 12, positions, bias=True, norm=False)]
    return component("anchor_head", layers,
                     f"1x1 convs {c_in}->18 cls, {c_in}->42 box, {c_in}->12 dir (bias) "
                     f"over {positions} map cells")


def fc_branch(c_in, hidden, c_out, evals):
    layers = []
    prev = c_in
    for h in hidden:
        layers.append(fc(prev, h, evals))
        prev = h
    layers.append(fc(prev, c_out, evals, bias=True, norm=False))
    return layers


def point_rcnn_heads():
    points = 16384
    point_head = component(
        "point_head",
        fc_branch(128, [256, 256], 3, points) + fc_branch(128, [256, 256], 8, points),
        f"per-point cls [128,256,256,3] and box [128,256,256,8] over {points} points")
    rois, roi_points = 100, 512
    layers = []
    layers += [fc(5, 128, rois * roi_points, bias=True, norm=False),
               fc(128, 128, rois * roi_points, bias=True, norm=False),
               fc(256, 128, rois * roi_points, bias=True, norm=False)]
    layers += shared_mlp([131, 128, 128, 128], rois * 128 * 16)
    layers += shared_mlp([131, 128, 128, 256], rois * 32 * 16)
    layers += shared_mlp([259, 256, 256, 512], rois * 32)
    layers += fc_branch(512, [256, 256], 1, rois) + fc_branch(512, [256, 256], 7, rois)
    roi_head = component(
        "roi_head", layers,
        f"xyz-up [5,128,128], merge 256->128, SA [131,128,128,128] x128x16, "
        f"[131,128,128,256] x32x16, [259,256,256,512] x32, cls/reg fc [512,256,256] "
        f"over {rois} proposals of {roi_points} points")
    return [point_head, roi_head]


def pv_rcnn_heads():
    keypoints = 2048
    vsa_layers = []
    for c_in, width, samples in [(1, 16, (16, 16)), (16, 16, (16, 16)), (32, 32, (16, 32)),
                                 (64, 64, (16, 32)), (64, 64, (16, 32))]:
        for s in samples:
            vsa_layers += shared_mlp([c_in + 3, width, width], keypoints * s)
    vsa_layers.append(fc(640, 128, keypoints))
    vsa = component(
        "voxel_set_abstraction", vsa_layers,
        f"two-scale SA MLPs on raw points and four sparse levels, fusion 640->128, "
        f"{keypoints} keypoints")
    point_head = component(
        "point_head", fc_branch(640, [256, 256], 1, keypoints),
        f"keypoint weighting cls [640,256,256,1] over {keypoints} keypoints")
    rois, grid = 100, 216
    roi_layers = []
    for _ in range(2):
        roi_layers += shared_mlp([131, 64, 64], rois * grid * 16)
    roi_layers += [fc(grid * 128, 256, rois), fc(256, 256, rois)]
    roi_layers += fc_branch(256, [256, 256], 1, rois) + fc_branch(256, [256, 256], 7, rois)
    roi_head = component(
        "roi_head", roi_layers,
        f"6x6x6 grid pooling [131,64,64] x2 scales, shared fc [27648,256,256], "
        f"cls/reg fc [256,256,256] over {rois} proposals")
    return [anchor_head(512, 176 * 200), point_head, roi_head, vsa]


def main():
    out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else (
        pathlib.Path(__file__).resolve().parent.parent / "configs" / "counting_rules.json")
    rules = {
        "schema_version": 1,
        "flops_per_mac": 2,
        "norm_params_per_channel": 2,
        "conv_bias": False,
        "sparse3d_in_total": False,
        "notes": [
            "Convolutions and shared MLPs carry no bias; each is followed by a batch norm "
            "contributing 2 parameters per output channel.",
            "Sparse 3D convolution parameters are reported as a separate line and excluded "
            "from the total parameter count; their FLOPs are included at the configured "
            "occupancy.",
            "Head components are per-backbone constants derived by tools/counting_rules.py.",
            "One multiply-accumulate counts as 2 FLOPs.",
        ],
        "heads": {
            "PointPillars": [anchor_head(384, 220 * 250)],
            "SECOND": [anchor_head(512, 176 * 200)],
            "PointRCNN": point_rcnn_heads(),
            "PVRCNN": pv_rcnn_heads(),
        },
    }
    out.write_text(json.dumps(rules, indent=2) + "\n")


if __name__ == "__main__":
    main()
