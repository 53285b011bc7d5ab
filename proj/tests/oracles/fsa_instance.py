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
"""One FSA layer on n = 3 nodes, d = 4, two heads, fixed weights."""

import numpy as np

from common import show

X = np.array([[0.2, -0.1, 0.4, 0.0], [1.0, 0.3, -0.5, 0.2], [-0.3, 0.8, 0.1, -0.6]])
P = np.array([[0.0, 0.0, 0.0], [1.0, 0.5, 0.0], [-0.5, 1.0, 0.25]])
idx = np.arange(16, dtype=np.float64).reshape(4, 4)
Wq = np.sin(idx + 1.0) * 0.5
Wk = np.cos(idx + 2.0) * 0.5
Wv = np.sin(0.7 * idx) * 0.8
Wo = np.cos(0.3 * idx) * 0.6
Wpos = np.sin(np.arange(12, dtype=np.float64).reshape(3, 4) + 0.5) * 0.1
gamma = np.array([1.0, 0.9, 1.1, 1.2])
beta = np.array([0.0, 0.05, -0.05, 0.1])
heads, eps = 2, 1e-5
hd = 4 // heads

E = X + P @ Wpos
Q, K, V = E @ Wq, E @ Wk, E @ Wv
ctx = np.zeros_like(X)
for h in range(heads):
    s = slice(h * hd, (h + 1) * hd)
    L = Q[:, s] @ K[:, s].T / np.sqrt(hd)
    A = np.exp(L - L.max(axis=1, keepdims=True))
    A /= A.sum(axis=1, keepdims=True)
    show(f"attention{h}", A)
    ctx[:, s] = A @ V[:, s]
Z = ctx @ Wo
G = Z.reshape(3, heads, hd)
mean = G.mean(axis=2, keepdims=True)
var = ((G - mean) ** 2).mean(axis=2, keepdims=True)
N = ((G - mean) / np.sqrt(var + eps)).reshape(3, 4) * gamma + beta
show("output", X + N)
