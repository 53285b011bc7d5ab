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
"""Inverse-distance up-sampling from m = 3 sources to n = 5 targets."""

import numpy as np

from common import show

src_pos = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
src_feat = np.array([[1.0, 0.0], [0.0, 2.0], [-1.0, 1.0]])
targets = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.3, 0.3, 0.0],
                    [5.0, 5.0, 5.0], [0.9, 0.9, 0.2]])
mlp = np.array([[1.0, 0.5], [-0.5, 2.0]])
radius = 1.2

out = []
for t in targets:
    d2 = ((src_pos - t) ** 2).sum(axis=1)
    use = np.where(d2 <= radius * radius)[0]
    if len(use) == 0:
        use = np.array([np.argmin(d2)])
    w = 1.0 / (d2[use] + 1e-8)
    w /= w.sum()
    out.append(w @ src_feat[use])
show("upsampled", np.array(out) @ mlp)
