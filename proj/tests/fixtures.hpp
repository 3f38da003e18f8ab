// Copyright 2026 The partseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <random>
#include <string>

#include "partseg/grammar.hpp"
#include "partseg/tensor.hpp"

namespace fixtures {

// Two quadrupeds with class-specific heads and shared body/leg/tail:
// 2 foreground objects, 5 scps over 4 meanings, 8 foreground connections.
inline const char* kHorseCowGrammar = R"(
[objects]
horse
cow
[scps]
head_h head
head_c head
body   body
leg    leg
tail   tail
[connections]
horse head_h
horse body
horse leg
horse tail
cow   head_c
cow   body
cow   leg
cow   tail
)";

inline partseg::LabelGrammar horse_cow() {
    return partseg::LabelGrammar::parse(kHorseCowGrammar);
}

// Random distribution-valued map: per pixel, normalized uniform draws.
inline partseg::PotentialMap random_potentials(int h, int w, int c, std::mt19937_64& rng) {
    partseg::PotentialMap map(h, w, c);
    std::uniform_real_distribution<double> uniform(0.05, 1.0);
    for (int r = 0; r < h; ++r)
        for (int col = 0; col < w; ++col) {
            double sum = 0.0;
            for (int ch = 0; ch < c; ++ch) {
                const double v = uniform(rng);
                map.at(r, col, ch) = static_cast<float>(v);
                sum += v;
            }
            for (int ch = 0; ch < c; ++ch)
                map.at(r, col, ch) = static_cast<float>(map.at(r, col, ch) / sum);
        }
    return map;
}

}  // namespace fixtures
