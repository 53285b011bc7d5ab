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
"""Closed-form parameter and FLOP count of one attention layer, from an
explicit list of the matrix products it performs (one MAC = 2 FLOPs)."""

n, C, d = 5000, 64, 64
m = 2048

params = 4 * C * d  # q, k, v, out
params += 3 * C     # position map
params += 2 * C     # norm scale and shift
macs = {
    "position": n * 3 * C,
    "qkv": 3 * n * C * d,
    "scores": n * n * d,
    "context": n * n * d,
    "output": n * d * C,
}
print("fsa_params =", params)
for k, v in macs.items():
    print(f"fsa_{k}_flops =", 2 * v)
print("fsa_total_flops =", 2 * sum(macs.values()))
print("subset_scores_flops =", 2 * m * m * d)
