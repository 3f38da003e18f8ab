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
#include <random>
#include <string>
#include <vector>

#include "partseg/grammar.hpp"
#include "partseg/pairwise.hpp"
#include "partseg/proposal.hpp"
#include "partseg/tensor.hpp"

namespace partseg {

// Axis-aligned part region, placed relative to the instance offset.
// Rectangles are half-open [r0, r1) x [c0, c1); ellipses are given by center
// and radii and include pixels with (dr/rr)^2 + (dc/rc)^2 <= 1.
struct PartShape {
    int scp = 0;
    bool ellipse = false;
    int a = 0, b = 0, c = 0, d = 0;  // rect: r0 c0 r1 c1; ellipse: cr cc rr rc
};

struct InstanceSpec {
    int object = 0;
    int offset_row = 0;
    int offset_col = 0;
    std::vector<PartShape> parts;
};

// Blends two channels of one potential map inside a rectangular region.
// strength 1 swaps them outright; strength 0.5 makes them equal.
struct ConfusionSpec {
    bool on_object = true;  // false: scp map
    int r0 = 0, c0 = 0, r1 = 0, c1 = 0;  // half-open
    int from = 0, to = 0;
    double strength = 1.0;
};

// Declarative scene: instances painted in order (later paint wins), then
// one-hot potentials mixed with noise, then confusions applied.
struct SceneSpec {
    int height = 0;
    int width = 0;
    double noise = 0.0;
    std::vector<InstanceSpec> instances;
    std::vector<ConfusionSpec> confusions;

    static SceneSpec parse(const std::string& text, const LabelGrammar& grammar);
    static SceneSpec load(const std::string& path, const LabelGrammar& grammar);
    std::string serialize(const LabelGrammar& grammar) const;
};

struct Scene {
    LabelMap object_gt;
    LabelMap scp_gt;
    LabelMap part_gt;
    PotentialMap object_potentials;
    PotentialMap scp_potentials;
};

// Paints ground truth from the spec and derives potentials as the convex
// combination (1 - noise) * onehot + noise * u with u a normalized uniform
// random vector per pixel; confusions applied last.  Deterministic per seed.
Scene generate_scene(const SceneSpec& spec, const LabelGrammar& grammar, std::uint64_t seed);

struct RandomSceneOptions {
    int height = 48;
    int width = 64;
    int min_instances = 1;
    int max_instances = 2;
    double noise = 0.05;
    bool allow_ellipses = true;
    // chance of repeating one part cell per instance (two segments, one scp)
    double duplicate_part_chance = 0.0;
};

// Instances laid out as horizontal strips of abutting part cells, one cell
// per connected scp, in well-separated row bands (gaps wide enough that the
// default grouping threshold keeps instances apart).
SceneSpec make_random_scene_spec(const LabelGrammar& grammar, std::mt19937_64& rng,
                                 const RandomSceneOptions& options = {});

// Majority label of the given pixels; ties resolve to the lowest label.
std::uint32_t dominant_label(const LabelMap& map, const std::vector<Pixel>& pixels);

// Runs the proposal stage on each scene's potentials and emits one sample per
// ordered segment pair per group, labeled with the dominant ground-truth
// object and scp labels of the two segments.
std::vector<PairwiseSample> generate_pairwise_dataset(const std::vector<Scene>& scenes,
                                                      double grouping_threshold = 10.0,
                                                      DistanceMetric metric = DistanceMetric::kEuclidean,
                                                      std::size_t min_segment_area = 0);

}  // namespace partseg
