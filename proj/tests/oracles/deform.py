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
"""Offset prediction on a four-node graph, subset {0, 2}, hand-built
neighborhoods that include the node itself."""

import numpy as np

from common import show

features = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, -1.0], [0.5, 0.5]])
positions = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.5, 0.5, 1.0]])
w_offset = np.array([[-0.5, 0.25, -1.0], [0.2, -0.4, 0.6]])
w_align = np.array([0.3, -0.7, 1.2])
subset = [0, 2]
neighbors = {0: [0, 1, 3], 2: [2, 3, 0]}

refined = []
xstar = []
for i in subset:
    acc = 0.0
    for j in neighbors[i]:
        acc += ((features[i] - features[j]) @ w_offset) @ (positions[i] - positions[j])
    x = max(acc, 0.0) / len(neighbors[i])
    xstar.append(x)
    refined.append(positions[i] + np.tanh(x * w_align))
show("x_star", xstar)
show("refined", refined)
