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

#include "partseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace partseg {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error("scene: " + what); }

std::vector<std::string> tokenize(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> tokens;
    std::string t;
    while (in >> t) {
        if (t.front() == '#') break;
        tokens.push_back(t);
    }
    return tokens;
}

int parse_int(const std::string& t, const std::string& what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(t, &pos);
        if (pos != t.size()) fail("malformed " + what + " '" + t + "'");
        return v;
    } catch (const std::logic_error&) {
        fail("malformed " + what + " '" + t + "'");
    }
}

double parse_double(const std::string& t, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(t, &pos);
        if (pos != t.size()) fail("malformed " + what + " '" + t + "'");
        return v;
    } catch (const std::logic_error&) {
        fail("malformed " + what + " '" + t + "'");
    }
}

void paint_part(LabelMap& scp_gt, const InstanceSpec& inst, const PartShape& part, int height,
                int width) {
    auto paint = [&](int r, int c) {
        if (r < 0 || r >= height || c < 0 || c >= width) fail("part pixel outside the image");
        scp_gt.at(r, c) = static_cast<std::uint32_t>(part.scp);
    };
    if (!part.ellipse) {
        for (int r = part.a; r < part.c; ++r)
            for (int c = part.b; c < part.d; ++c)
                paint(inst.offset_row + r, inst.offset_col + c);
    } else {
        const double rr = part.c, rc = part.d;
        for (int r = part.a - part.c; r <= part.a + part.c; ++r)
            for (int c = part.b - part.d; c <= part.b + part.d; ++c) {
                const double dr = (r - part.a) / rr, dc = (c - part.b) / rc;
                if (dr * dr + dc * dc <= 1.0) paint(inst.offset_row + r, inst.offset_col + c);
            }
    }
}

PotentialMap noisy_onehot(const LabelMap& gt, int channels, double noise, std::mt19937_64& rng) {
    PotentialMap out(gt.height, gt.width, channels);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> u(channels);
    for (int r = 0; r < gt.height; ++r) {
        for (int c = 0; c < gt.width; ++c) {
            double sum = 0.0;
            for (double& v : u) {
                v = uniform(rng);
                sum += v;
            }
            const std::uint32_t label = gt.at(r, c);
            for (int ch = 0; ch < channels; ++ch) {
                const double onehot = static_cast<std::uint32_t>(ch) == label ? 1.0 : 0.0;
                out.at(r, c, ch) =
                    static_cast<float>((1.0 - noise) * onehot + noise * u[ch] / sum);
            }
        }
    }
    return out;
}

void apply_confusion(PotentialMap& map, const ConfusionSpec& conf) {
    if (conf.from < 0 || conf.from >= map.channels || conf.to < 0 || conf.to >= map.channels)
        fail("confusion channel out of range");
    if (conf.from == conf.to) fail("confusion channels must differ");
    if (conf.r0 < 0 || conf.c0 < 0 || conf.r1 > map.height || conf.c1 > map.width ||
        conf.r0 >= conf.r1 || conf.c0 >= conf.c1)
        fail("confusion region out of range");
    if (conf.strength < 0.0 || conf.strength > 1.0) fail("confusion strength outside [0,1]");
    const double s = conf.strength;
    for (int r = conf.r0; r < conf.r1; ++r)
        for (int c = conf.c0; c < conf.c1; ++c) {
            const double a = map.at(r, c, conf.from), b = map.at(r, c, conf.to);
            map.at(r, c, conf.from) = static_cast<float>((1.0 - s) * a + s * b);
            map.at(r, c, conf.to) = static_cast<float>((1.0 - s) * b + s * a);
        }
}

}  // namespace

SceneSpec SceneSpec::parse(const std::string& text, const LabelGrammar& grammar) {
    SceneSpec spec;
    std::istringstream in(text);
    std::string line;
    InstanceSpec* open_instance = nullptr;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = tokenize(line);
        if (tokens.empty()) continue;
        const std::string& cmd = tokens[0];
        auto want = [&](std::size_t n) {
            if (tokens.size() != n)
                fail("line " + std::to_string(line_no) + ": '" + cmd + "' expects " +
                     std::to_string(n - 1) + " arguments");
        };
        if (cmd == "size") {
            want(3);
            spec.height = parse_int(tokens[1], "height");
            spec.width = parse_int(tokens[2], "width");
            if (spec.height < 1 || spec.width < 1) fail("size must be positive");
        } else if (cmd == "noise") {
            want(2);
            spec.noise = parse_double(tokens[1], "noise");
            if (spec.noise < 0.0 || spec.noise > 1.0) fail("noise outside [0,1]");
        } else if (cmd == "instance") {
            want(2);
            if (open_instance) fail("line " + std::to_string(line_no) + ": previous instance not ended");
            InstanceSpec inst;
            inst.object = grammar.object_index(tokens[1]);
            if (inst.object == 0) fail("instance cannot be background");
            spec.instances.push_back(inst);
            open_instance = &spec.instances.back();
        } else if (cmd == "offset") {
            want(3);
            if (!open_instance) fail("line " + std::to_string(line_no) + ": offset outside an instance");
            open_instance->offset_row = parse_int(tokens[1], "offset row");
            open_instance->offset_col = parse_int(tokens[2], "offset col");
        } else if (cmd == "part") {
            if (!open_instance) fail("line " + std::to_string(line_no) + ": part outside an instance");
            want(7);
            PartShape part;
            part.scp = grammar.scp_index(tokens[1]);
            if (tokens[2] == "rect")
                part.ellipse = false;
            else if (tokens[2] == "ellipse")
                part.ellipse = true;
            else
                fail("line " + std::to_string(line_no) + ": unknown shape '" + tokens[2] + "'");
            part.a = parse_int(tokens[3], "shape coordinate");
            part.b = parse_int(tokens[4], "shape coordinate");
            part.c = parse_int(tokens[5], "shape coordinate");
            part.d = parse_int(tokens[6], "shape coordinate");
            open_instance->parts.push_back(part);
        } else if (cmd == "end") {
            want(1);
            if (!open_instance) fail("line " + std::to_string(line_no) + ": end without instance");
            if (open_instance->parts.empty()) fail("instance with no parts");
            open_instance = nullptr;
        } else if (cmd == "confuse") {
            if (tokens.size() != 8 && tokens.size() != 9)
                fail("line " + std::to_string(line_no) + ": 'confuse' expects 7 or 8 arguments");
            ConfusionSpec conf;
            if (tokens[1] == "object")
                conf.on_object = true;
            else if (tokens[1] == "scp")
                conf.on_object = false;
            else
                fail("line " + std::to_string(line_no) + ": unknown confusion target '" + tokens[1] + "'");
            conf.r0 = parse_int(tokens[2], "region coordinate");
            conf.c0 = parse_int(tokens[3], "region coordinate");
            conf.r1 = parse_int(tokens[4], "region coordinate");
            conf.c1 = parse_int(tokens[5], "region coordinate");
            conf.from = conf.on_object ? grammar.object_index(tokens[6]) : grammar.scp_index(tokens[6]);
            conf.to = conf.on_object ? grammar.object_index(tokens[7]) : grammar.scp_index(tokens[7]);
            conf.strength = tokens.size() == 9 ? parse_double(tokens[8], "strength") : 1.0;
            spec.confusions.push_back(conf);
        } else {
            fail("line " + std::to_string(line_no) + ": unknown directive '" + cmd + "'");
        }
    }
    if (open_instance) fail("unterminated instance");
    if (spec.height < 1 || spec.width < 1) fail("missing size directive");
    for (const InstanceSpec& inst : spec.instances)
        for (const PartShape& part : inst.parts)
            if (!grammar.is_consistent(inst.object, part.scp))
                fail("part '" + grammar.scp_names()[part.scp] + "' is not a part of object '" +
                     grammar.object_names()[inst.object] + "'");
    return spec;
}

SceneSpec SceneSpec::load(const std::string& path, const LabelGrammar& grammar) {
    std::ifstream in(path);
    if (!in) fail("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), grammar);
}

std::string SceneSpec::serialize(const LabelGrammar& grammar) const {
    std::ostringstream out;
    out << "size " << height << " " << width << "\n";
    out << "noise " << noise << "\n";
    for (const InstanceSpec& inst : instances) {
        out << "instance " << grammar.object_names()[inst.object] << "\n";
        out << "offset " << inst.offset_row << " " << inst.offset_col << "\n";
        for (const PartShape& part : inst.parts)
            out << "part " << grammar.scp_names()[part.scp] << " "
                << (part.ellipse ? "ellipse" : "rect") << " " << part.a << " " << part.b << " "
                << part.c << " " << part.d << "\n";
        out << "end\n";
    }
    for (const ConfusionSpec& conf : confusions) {
        out << "confuse " << (conf.on_object ? "object" : "scp") << " " << conf.r0 << " " << conf.c0
            << " " << conf.r1 << " " << conf.c1 << " ";
        if (conf.on_object)
            out << grammar.object_names()[conf.from] << " " << grammar.object_names()[conf.to];
        else
            out << grammar.scp_names()[conf.from] << " " << grammar.scp_names()[conf.to];
        out << " " << conf.strength << "\n";
    }
    return out.str();
}

Scene generate_scene(const SceneSpec& spec, const LabelGrammar& grammar, std::uint64_t seed) {
    if (spec.height < 1 || spec.width < 1) fail("invalid size");
    Scene scene;
    scene.scp_gt = LabelMap(spec.height, spec.width);
    scene.object_gt = LabelMap(spec.height, spec.width);
    scene.part_gt = LabelMap(spec.height, spec.width);

    for (const InstanceSpec& inst : spec.instances) {
        for (const PartShape& part : inst.parts) {
            if (!grammar.is_consistent(inst.object, part.scp)) fail("inconsistent instance part");
            paint_part(scene.scp_gt, inst, part, spec.height, spec.width);
        }
        // object and part maps repainted from this instance's pixels so a
        // later instance cleanly overwrites an earlier one
        for (const PartShape& part : inst.parts) {
            LabelMap mask(spec.height, spec.width);
            paint_part(mask, inst, part, spec.height, spec.width);
            for (int r = 0; r < spec.height; ++r)
                for (int c = 0; c < spec.width; ++c)
                    if (mask.at(r, c) != 0 && scene.scp_gt.at(r, c) == mask.at(r, c)) {
                        scene.object_gt.at(r, c) = static_cast<std::uint32_t>(inst.object);
                        scene.part_gt.at(r, c) = static_cast<std::uint32_t>(
                            grammar.part_label_index(inst.object, part.scp));
                    }
        }
    }

    std::mt19937_64 rng(seed);
    scene.object_potentials = noisy_onehot(scene.object_gt, grammar.num_objects(), spec.noise, rng);
    scene.scp_potentials = noisy_onehot(scene.scp_gt, grammar.num_scps(), spec.noise, rng);
    for (const ConfusionSpec& conf : spec.confusions)
        apply_confusion(conf.on_object ? scene.object_potentials : scene.scp_potentials, conf);
    scene.object_potentials.validate();
    scene.scp_potentials.validate();
    return scene;
}

SceneSpec make_random_scene_spec(const LabelGrammar& grammar, std::mt19937_64& rng,
                                 const RandomSceneOptions& options) {
    if (grammar.num_objects() < 2) fail("grammar has no foreground objects");
    if (options.min_instances < 1 || options.max_instances < options.min_instances)
        fail("invalid instance count range");

    SceneSpec spec;
    spec.height = options.height;
    spec.width = options.width;
    spec.noise = options.noise;

    std::uniform_int_distribution<int> count_dist(options.min_instances, options.max_instances);
    std::uniform_int_distribution<int> object_dist(1, grammar.num_objects() - 1);
    std::uniform_real_distribution<double> chance(0.0, 1.0);

    const int instances = count_dist(rng);
    // row bands separated by 14 background rows so segments of different
    // instances stay farther apart than the default grouping threshold;
    // ellipses overhang their cell by one row/column, reserved below
    const int cell_h = 10;
    const int band_stride = cell_h + 14;
    if (options.height < (instances - 1) * band_stride + cell_h + 2)
        fail("image too short for the instance count");

    for (int k = 0; k < instances; ++k) {
        InstanceSpec inst;
        inst.object = object_dist(rng);
        std::vector<int> scps;
        for (const JointLabel& jl : grammar.foreground_pairs())
            if (jl.object == inst.object) scps.push_back(jl.scp);
        if (options.duplicate_part_chance > 0.0 && chance(rng) < options.duplicate_part_chance)
            scps.push_back(scps[std::uniform_int_distribution<std::size_t>(0, scps.size() - 1)(rng)]);

        const int max_cell_w = std::max(6, (options.width - 2) / static_cast<int>(scps.size()));
        const int cell_w = std::min(10, max_cell_w);
        const int strip_w = cell_w * static_cast<int>(scps.size());
        if (strip_w + 1 > options.width) fail("image too narrow for the part strip");

        const int band_top = k * band_stride;
        inst.offset_row = band_top + std::uniform_int_distribution<int>(0, 1)(rng);
        inst.offset_col = std::uniform_int_distribution<int>(0, options.width - strip_w - 1)(rng);

        for (std::size_t s = 0; s < scps.size(); ++s) {
            PartShape part;
            part.scp = scps[s];
            const int c0 = static_cast<int>(s) * cell_w;
            if (options.allow_ellipses && chance(rng) < 0.33) {
                part.ellipse = true;
                part.a = cell_h / 2;
                part.b = c0 + cell_w / 2;
                part.c = cell_h / 2;
                part.d = cell_w / 2;
            } else {
                part.ellipse = false;
                part.a = 0;
                part.b = c0;
                part.c = cell_h;
                part.d = c0 + cell_w;
            }
            inst.parts.push_back(part);
        }
        spec.instances.push_back(std::move(inst));
    }
    return spec;
}

std::uint32_t dominant_label(const LabelMap& map, const std::vector<Pixel>& pixels) {
    if (pixels.empty()) throw std::invalid_argument("scene: dominant label of no pixels");
    std::map<std::uint32_t, std::size_t> counts;
    for (const Pixel& p : pixels) ++counts[map.at(p.row, p.col)];
    std::uint32_t best = counts.begin()->first;
    std::size_t best_count = counts.begin()->second;
    for (const auto& [label, count] : counts)
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    return best;
}

std::vector<PairwiseSample> generate_pairwise_dataset(const std::vector<Scene>& scenes,
                                                      double grouping_threshold,
                                                      DistanceMetric metric,
                                                      std::size_t min_segment_area) {
    std::vector<PairwiseSample> samples;
    for (const Scene& scene : scenes) {
        const LabelMap proposal = argmax_labels(scene.scp_potentials);
        const auto segments = connected_components(proposal, min_segment_area);
        const auto groups = group_segments(segments, grouping_threshold, metric);
        const EdgeMap edge_map = compute_edge_map(scene.scp_potentials);
        for (const SegmentGroup& group : groups) {
            if (group.segments.size() < 2) continue;
            const EdgeWeightGraph graph = build_edge_weight_graph(group, edge_map);
            const int n = static_cast<int>(group.segments.size());
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    if (i == j) continue;
                    PairwiseSample sample;
                    sample.features =
                        compute_pairwise_features(group, scene.object_potentials,
                                                  scene.scp_potentials, graph, i, j)
                            .to_vector();
                    sample.labels = {
                        static_cast<int>(dominant_label(scene.object_gt, group.segments[i].pixels)),
                        static_cast<int>(dominant_label(scene.object_gt, group.segments[j].pixels)),
                        static_cast<int>(dominant_label(scene.scp_gt, group.segments[i].pixels)),
                        static_cast<int>(dominant_label(scene.scp_gt, group.segments[j].pixels))};
                    samples.push_back(std::move(sample));
                }
        }
    }
    return samples;
}

}  // namespace partseg
