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
"""Group normalization of one 8-channel row, biased variance."""

import numpy as np

from common import show

x = np.array([0.5, -1.25, 2.0, 0.0, 3.5, -0.75, 1.0, 4.25])
gamma = np.array([1.0, 0.5, 2.0, 1.5, 1.0, 1.0, 0.25, 3.0])
beta = np.array([0.0, 0.1, -0.2, 0.3, 0.0, -1.0, 0.5, 0.0])
eps = 1e-5

for groups in (1, 2, 4):
    g = x.reshape(groups, -1)
    mean = g.mean(axis=1, keepdims=True)
    var = ((g - mean) ** 2).mean(axis=1, keepdims=True)
    y = ((g - mean) / np.sqrt(var + eps)).ravel() * gamma + beta
    show(f"groups{groups}", y)
