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

#include <cstdint>
#include <string>
#include <vector>

namespace partseg {

/// Per-pixel probability distribution over a label space (SCP or object
/// channels). Values live in [0,1] and sum to 1 per pixel within 1e-5.
/// Row-major storage with channel fastest.
struct PotentialMap {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> values;

    PotentialMap() = default;
    PotentialMap(int h, int w, int c) : height(h), width(w), channels(c),
        values(static_cast<std::size_t>(h) * w * c, 0.0f) {}

    std::size_t index(int r, int c, int ch) const {
        return (static_cast<std::size_t>(r) * width + c) * channels + ch;
    }
    float at(int r, int c, int ch) const { return values[index(r, c, ch)]; }
    float& at(int r, int c, int ch) { return values[index(r, c, ch)]; }

    /// Throws std::runtime_error on NaN values, values outside [0,1], or a
    /// per-pixel channel sum off 1 by more than 1e-5.
    void validate() const;
};

/// Per-pixel label indices (SCP, object, or part space depending on use).
struct LabelMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint32_t> labels;

    LabelMap() = default;
    LabelMap(int h, int w) : height(h), width(w),
        labels(static_cast<std::size_t>(h) * w, 0) {}

    std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * width + c; }
    std::uint32_t at(int r, int c) const { return labels[index(r, c)]; }
    std::uint32_t& at(int r, int c) { return labels[index(r, c)]; }

    friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Divides every pixel of a nonnegative score tensor by its channel sum.
/// Throws std::runtime_error on negative entries or an all-zero pixel.
PotentialMap normalize(const PotentialMap& raw);

// Tensor files: 16-byte magic, u32 height/width/channels, then the payload,
// all little-endian. Potential maps store f32 probabilities; label maps store
// u32 labels with channels fixed to 1.
PotentialMap load_potential_map(const std::string& path);
void save_potential_map(const PotentialMap& map, const std::string& path);

LabelMap load_label_map(const std::string& path);
void save_label_map(const LabelMap& map, const std::string& path);

}  // namespace partseg
