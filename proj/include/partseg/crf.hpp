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

#include <utility>
#include <vector>

#include "partseg/grammar.hpp"
#include "partseg/pairwise.hpp"
#include "partseg/proposal.hpp"
#include "partseg/tensor.hpp"

namespace partseg {

constexpr double kDefaultLambdaE = 2.0;
constexpr double kDefaultLambdaP = 0.3;

enum class DomainMode {
    // every grammar-consistent foreground (object, scp) pair
    kAllConsistent,
    // only pairs whose scp shares the proposed segment's semantic meaning
    kMatchMeaning,
};

// Admissible joint labels for a segment proposed as `proposed_scp`.
// Inconsistent pairs are excluded up front rather than penalized.
std::vector<JointLabel> make_node_domain(const LabelGrammar& grammar, std::uint32_t proposed_scp,
                                         DomainMode mode = DomainMode::kAllConsistent);

struct FactorNode {
    std::vector<JointLabel> domain;
    std::vector<double> unary;  // energy per domain entry, lambda_p folded in
};

// Unordered pair; `table` is row-major [|domain_a|][|domain_b|] with
// lambda_e and both pair orientations folded in.
struct FactorEdge {
    int a = 0;
    int b = 0;
    std::vector<double> table;
};

struct FactorGraph {
    std::vector<FactorNode> nodes;
    std::vector<FactorEdge> edges;  // n(n-1)/2, ordered (a, b), a < b
    double lambda_e = kDefaultLambdaE;
    double lambda_p = kDefaultLambdaP;
};

struct Labeling {
    std::vector<JointLabel> labels;
    std::vector<int> domain_indices;
    double total_energy = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Sum over segment pixels of -log P_obj(label.object) plus lambda_p times the
// same sum over P_scp(label.scp); probabilities floored at 1e-12.
double unary_energy(const Segment& segment, const PotentialMap& object_potentials,
                    const PotentialMap& scp_potentials, const JointLabel& label, double lambda_p);

// Fully connected graph over the group's segments.  Edge tables symmetrize
// the two pair orientations: table(a, b) = lambda_e * (psi(f_ij) at
// (a, b) + psi(f_ji) at (b, a)).
FactorGraph build_fcrf(const SegmentGroup& group, const PotentialMap& object_potentials,
                       const PotentialMap& scp_potentials, const PairwiseModel& model,
                       const LabelGrammar& grammar, double lambda_e = kDefaultLambdaE,
                       double lambda_p = kDefaultLambdaP,
                       DomainMode mode = DomainMode::kAllConsistent);

// Energy of the assignment given as per-node domain indices.
double evaluate_energy(const FactorGraph& fg, const std::vector<int>& domain_indices);

// Synchronous min-sum loopy belief propagation.  Messages are normalized by
// subtracting their minimum; stored messages blend old and new with
// `damping` as the weight of the old.  Convergence is measured between
// successive undamped message proposals; once they stabilize below `tol` the
// stored messages snap to the stable proposal.  Decodes per-node belief
// argmin, ties to the lowest domain index; the decode is evaluated every
// iteration and the lowest-energy labeling seen is returned, so converged
// runs report the fixed-point decode and oscillating runs the best visited.
Labeling lbp_map(const FactorGraph& fg, int max_iters = 5, double damping = 0.5,
                 double tol = 1e-6);

// Exhaustive global minimum; ties broken lexicographically.  Guarded: the
// joint space must not exceed 1e7 assignments.
Labeling brute_force_map(const FactorGraph& fg);

// Paints the group's segments with decoded object labels and recovered part
// labels (index = object * num_meanings + meaning) onto background canvases.
std::pair<LabelMap, LabelMap> decode_maps(const SegmentGroup& group, const Labeling& labeling,
                                          const LabelGrammar& grammar, int height, int width);

// Same, painting into existing canvases so several groups can share one
// image.  Throws std::logic_error if a painted pixel is already foreground.
void decode_into(const SegmentGroup& group, const Labeling& labeling, const LabelGrammar& grammar,
                 LabelMap& object_map, LabelMap& part_map);

}  // namespace partseg
