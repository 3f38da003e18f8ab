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

#include "partseg/tensor.hpp"

#include <cmath>
#include <stdexcept>

#include "partseg/binary_io.hpp"

namespace partseg {

namespace {
constexpr const char* kTensorMagic = "PARTSEGTENSOR01";
constexpr const char* kLabelMagic = "PARTSEGLABELS01";
constexpr double kSumTolerance = 1e-5;
constexpr float kValueSlack = 1e-6f;

void check_dims(int h, int w, int c) {
    if (h <= 0 || w <= 0 || c <= 0)
        throw std::runtime_error("tensor: dimensions must be positive");
}
}  // namespace

void PotentialMap::validate() const {
    check_dims(height, width, channels);
    if (values.size() != static_cast<std::size_t>(height) * width * channels)
        throw std::runtime_error("tensor: value count does not match dimensions");
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double sum = 0.0;
            for (int ch = 0; ch < channels; ++ch) {
                const float v = at(r, c, ch);
                if (std::isnan(v))
                    throw std::runtime_error("tensor: NaN value at pixel (" +
                                             std::to_string(r) + "," + std::to_string(c) + ")");
                if (v < -kValueSlack || v > 1.0f + kValueSlack)
                    throw std::runtime_error("tensor: value outside [0,1] at pixel (" +
                                             std::to_string(r) + "," + std::to_string(c) + ")");
                sum += v;
            }
            if (std::abs(sum - 1.0) > kSumTolerance)
                throw std::runtime_error("tensor: channel sum " + std::to_string(sum) +
                                         " at pixel (" + std::to_string(r) + "," +
                                         std::to_string(c) + ") is not 1");
        }
    }
}

PotentialMap normalize(const PotentialMap& raw) {
    check_dims(raw.height, raw.width, raw.channels);
    PotentialMap out(raw.height, raw.width, raw.channels);
    for (int r = 0; r < raw.height; ++r) {
        for (int c = 0; c < raw.width; ++c) {
            double sum = 0.0;
            for (int ch = 0; ch < raw.channels; ++ch) {
                const float v = raw.at(r, c, ch);
                if (std::isnan(v) || v < 0.0f)
                    throw std::runtime_error("normalize: negative or NaN entry at pixel (" +
                                             std::to_string(r) + "," + std::to_string(c) + ")");
                sum += v;
            }
            if (sum <= 0.0)
                throw std::runtime_error("normalize: all-zero pixel (" + std::to_string(r) +
                                         "," + std::to_string(c) + ")");
            for (int ch = 0; ch < raw.channels; ++ch)
                out.at(r, c, ch) = static_cast<float>(raw.at(r, c, ch) / sum);
        }
    }
    return out;
}

void save_potential_map(const PotentialMap& map, const std::string& path) {
    map.validate();
    auto out = io::open_out(path);
    io::write_magic(out, kTensorMagic);
    io::write_u32(out, static_cast<std::uint32_t>(map.height));
    io::write_u32(out, static_cast<std::uint32_t>(map.width));
    io::write_u32(out, static_cast<std::uint32_t>(map.channels));
    for (float v : map.values) io::write_f32(out, v);
    if (!out) throw std::runtime_error("tensor: write failed for '" + path + "'");
}

PotentialMap load_potential_map(const std::string& path) {
    auto in = io::open_in(path);
    io::check_magic(in, kTensorMagic, "potential map");
    const int h = static_cast<int>(io::read_u32(in));
    const int w = static_cast<int>(io::read_u32(in));
    const int c = static_cast<int>(io::read_u32(in));
    check_dims(h, w, c);
    PotentialMap map(h, w, c);
    for (float& v : map.values) v = io::read_f32(in);
    map.validate();
    return map;
}

void save_label_map(const LabelMap& map, const std::string& path) {
    check_dims(map.height, map.width, 1);
    if (map.labels.size() != static_cast<std::size_t>(map.height) * map.width)
        throw std::runtime_error("tensor: label count does not match dimensions");
    auto out = io::open_out(path);
    io::write_magic(out, kLabelMagic);
    io::write_u32(out, static_cast<std::uint32_t>(map.height));
    io::write_u32(out, static_cast<std::uint32_t>(map.width));
    io::write_u32(out, 1);
    for (std::uint32_t v : map.labels) io::write_u32(out, v);
    if (!out) throw std::runtime_error("tensor: write failed for '" + path + "'");
}

LabelMap load_label_map(const std::string& path) {
    auto in = io::open_in(path);
    io::check_magic(in, kLabelMagic, "label map");
    const int h = static_cast<int>(io::read_u32(in));
    const int w = static_cast<int>(io::read_u32(in));
    const int c = static_cast<int>(io::read_u32(in));
    if (c != 1) throw std::runtime_error("tensor: label map must have a single channel");
    check_dims(h, w, 1);
    LabelMap map(h, w);
    for (std::uint32_t& v : map.labels) v = io::read_u32(in);
    return map;
}

}  // namespace partseg
