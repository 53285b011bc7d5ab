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
"""Independent parameter count of PointPillars-style detectors: pillar
feature net, 2D backbone with deconvolution necks, and a fixed-size anchor
head. Convolutions carry no bias; every BN layer has scale and shift."""


def conv(cin, cout, k):
    return cin * cout * k * k + 2 * cout


def backbone(cin, layer_nums, strides, filters, up_strides, up_filters):
    total = 0
    for nl, f, us, uf in zip(layer_nums, filters, up_strides, up_filters):
        total += conv(cin, f, 3)
        total += nl * conv(f, f, 3)
        total += conv(f, uf, us)  # deconv kernel = stride
        cin = f
    return total


def attention(c, layers):
    return layers * (4 * c * c + 3 * c + 2 * c)


pfn = 10 * 64 + 2 * 64
head = 27720
pp = pfn + backbone(64, [3, 5, 5], [2, 2, 2], [64, 128, 256], [1, 2, 4], [128, 128, 128]) + head
pp_red = pfn + backbone(64, [3, 5, 5], [2, 2, 2], [64, 64, 128], [1, 2, 4], [128, 128, 128]) + head
fsa_pp = pfn + backbone(64, [3, 5, 5], [2, 2, 2], [64, 64, 64], [1, 2, 4], [128, 128, 128]) + head
fsa_pp += attention(64, 2)
print("pp =", pp)
print("pp_red =", pp_red)
print("fsa_pp =", fsa_pp)
