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

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "partseg/proposal.hpp"
#include "partseg/refiner.hpp"
#include "partseg/tensor.hpp"

namespace partseg {

// Nonnegative per-pixel edge strength, min-max normalized to [0,1].
struct EdgeMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
};

// Gradient magnitude of the per-pixel max-probability channel, via clamped
// central differences, min-max normalized.
EdgeMap compute_edge_map(const PotentialMap& source);

// Region-adjacency graph over the segments of one group.  Edges connect
// segments whose boundaries touch (4-adjacency); the weight sums the edge-map
// values over both sides of the shared boundary.
struct EdgeWeightGraph {
    int num_nodes = 0;
    // adjacency[i] holds (j, weight), weight >= 0, symmetric
    std::vector<std::vector<std::pair<int, double>>> adjacency;
    double total_weight = 0.0;
};

EdgeWeightGraph build_edge_weight_graph(const SegmentGroup& group, const EdgeMap& edges);

// Shortest-path distance between nodes of `g`; 0 when i = j, and
// total_weight + 1 when no path exists.
double geodesic_distance(const EdgeWeightGraph& g, int i, int j);

struct SegmentDescriptor {
    std::vector<double> mean_object_potentials;  // length N_o + 1
    std::vector<double> mean_scp_potentials;     // length N_p + 1
    double normalized_area = 0.0;                // segment area / group object area
};

SegmentDescriptor compute_descriptor(const Segment& segment, const SegmentGroup& group,
                                     const PotentialMap& object_potentials,
                                     const PotentialMap& scp_potentials);

struct PairwiseFeatures {
    SegmentDescriptor desc_i;
    SegmentDescriptor desc_j;
    double geodesic = 0.0;   // accumulated edge weight along the adjacency path
    double euclidean = 0.0;  // centroid distance normalized by the group bbox
    double angle_sin = 0.0;  // direction of j's centroid relative to i's
    double angle_cos = 1.0;

    std::vector<double> to_vector() const;
    static int dimension(int num_object_labels, int num_scp_labels);
};

// Features for the ordered pair (i, j) of positions within `group.segments`.
// Swapping i and j swaps the descriptors, keeps both distances, and negates
// both angle components.
PairwiseFeatures compute_pairwise_features(const SegmentGroup& group,
                                           const PotentialMap& object_potentials,
                                           const PotentialMap& scp_potentials,
                                           const EdgeWeightGraph& graph, int i, int j);

// Shared hidden layer (ReLU) feeding four independent linear+softmax heads:
// object of i, object of j, scp of i, scp of j.
struct PairwiseModel {
    int input_dim = 0;
    int hidden_dim = 32;
    double dropout_rate = 0.2;  // training only
    std::vector<double> w1;     // [input_dim][hidden_dim]
    std::vector<double> b1;     // [hidden_dim]
    struct Head {
        int out_dim = 0;
        std::vector<double> w;  // [hidden_dim][out_dim]
        std::vector<double> b;  // [out_dim]
    };
    std::array<Head, 4> heads;  // obj_i, obj_j, scp_i, scp_j
};

// Xavier-uniform weights from the given seed; heads sized from label counts.
PairwiseModel init_pairwise_model(int input_dim, int num_object_labels, int num_scp_labels,
                                  std::uint64_t seed, int hidden_dim = 32);

// Four probability vectors, one per head.  Dropout is off: deterministic.
std::array<std::vector<double>, 4> model_forward(const PairwiseModel& m,
                                                 std::span<const double> features);

struct PairwiseSample {
    std::vector<double> features;
    std::array<int, 4> labels;  // obj_i, obj_j, scp_i, scp_j
};

// Mean summed four-head multinomial logistic loss over `samples`, plus
// parameter gradients when requested.  A non-null `rng` enables inverted
// dropout on the hidden activations.
double pairwise_loss_and_grad(const PairwiseModel& m, std::span<const PairwiseSample> samples,
                              PairwiseModel* grad = nullptr, std::mt19937_64* rng = nullptr);

PairwiseModel train_pairwise_model(const std::vector<PairwiseSample>& samples,
                                   int num_object_labels, int num_scp_labels,
                                   const TrainConfig& cfg, std::vector<double>* loss_log = nullptr,
                                   double dropout_rate = 0.2, int hidden_dim = 32);

// -log P(l_o^i) - log P(l_o^j) - log P(l_p^i) - log P(l_p^j), probabilities
// floored at 1e-12.
double pairwise_potential(const PairwiseModel& m, std::span<const double> features,
                          const std::array<int, 4>& labels);

void save_pairwise_model(const PairwiseModel& m, const std::string& path);
PairwiseModel load_pairwise_model(const std::string& path);

}  // namespace partseg
