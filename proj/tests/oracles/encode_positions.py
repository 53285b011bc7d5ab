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
"""features + positions @ wpos for a 2 x 4 example."""

import numpy as np

from common import show

features = np.array([[1.0, 2.0, 3.0, 4.0], [-1.0, 0.5, 0.0, 2.5]])
positions = np.array([[10.0, -2.0, 0.5], [0.0, 4.0, -1.5]])
wpos = np.array([[0.1, 0.0, -0.2, 0.3], [0.05, 0.5, 0.0, -0.1], [1.0, -1.0, 0.25, 0.0]])
show("encoded", features + positions @ wpos)
