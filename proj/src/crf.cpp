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

#include "partseg/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace partseg {

namespace {

constexpr double kLogFloor = 1e-12;

double clipped_neg_log(float p) { return -std::log(std::max(static_cast<double>(p), kLogFloor)); }

}  // namespace

std::vector<JointLabel> make_node_domain(const LabelGrammar& grammar, std::uint32_t proposed_scp,
                                         DomainMode mode) {
    if (proposed_scp == 0 || static_cast<int>(proposed_scp) >= grammar.num_scps())
        throw std::out_of_range("crf: proposed scp out of range");
    std::vector<JointLabel> domain;
    const int meaning = grammar.meaning_of(static_cast<int>(proposed_scp));
    for (const JointLabel& jl : grammar.foreground_pairs()) {
        if (mode == DomainMode::kMatchMeaning && grammar.meaning_of(jl.scp) != meaning) continue;
        domain.push_back(jl);
    }
    if (domain.empty()) throw std::runtime_error("crf: empty node domain");
    return domain;
}

double unary_energy(const Segment& segment, const PotentialMap& object_potentials,
                    const PotentialMap& scp_potentials, const JointLabel& label, double lambda_p) {
    if (label.object < 0 || label.object >= object_potentials.channels)
        throw std::out_of_range("crf: object label out of domain");
    if (label.scp < 0 || label.scp >= scp_potentials.channels)
        throw std::out_of_range("crf: scp label out of domain");
    double obj_sum = 0.0, scp_sum = 0.0;
    for (const Pixel& p : segment.pixels) {
        obj_sum += clipped_neg_log(object_potentials.at(p.row, p.col, label.object));
        scp_sum += clipped_neg_log(scp_potentials.at(p.row, p.col, label.scp));
    }
    return obj_sum + lambda_p * scp_sum;
}

FactorGraph build_fcrf(const SegmentGroup& group, const PotentialMap& object_potentials,
                       const PotentialMap& scp_potentials, const PairwiseModel& model,
                       const LabelGrammar& grammar, double lambda_e, double lambda_p,
                       DomainMode mode) {
    const int n = static_cast<int>(group.segments.size());
    if (n == 0) throw std::invalid_argument("crf: empty segment group");

    FactorGraph fg;
    fg.lambda_e = lambda_e;
    fg.lambda_p = lambda_p;
    fg.nodes.resize(n);
    for (int i = 0; i < n; ++i) {
        FactorNode& node = fg.nodes[i];
        node.domain = make_node_domain(grammar, group.segments[i].scp, mode);
        node.unary.reserve(node.domain.size());
        for (const JointLabel& jl : node.domain)
            node.unary.push_back(
                unary_energy(group.segments[i], object_potentials, scp_potentials, jl, lambda_p));
    }
    if (n == 1) return fg;

    const EdgeMap edge_map = compute_edge_map(scp_potentials);
    const EdgeWeightGraph graph = build_edge_weight_graph(group, edge_map);
    // features for every ordered pair; the (j, i) direction lands transposed
    // in the same unordered table
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const auto fij =
                compute_pairwise_features(group, object_potentials, scp_potentials, graph, i, j)
                    .to_vector();
            const auto fji =
                compute_pairwise_features(group, object_potentials, scp_potentials, graph, j, i)
                    .to_vector();
            const auto probs_ij = model_forward(model, fij);
            const auto probs_ji = model_forward(model, fji);
            FactorEdge edge;
            edge.a = i;
            edge.b = j;
            const auto& da = fg.nodes[i].domain;
            const auto& db = fg.nodes[j].domain;
            edge.table.resize(da.size() * db.size());
            auto head_energy = [](const std::array<std::vector<double>, 4>& probs,
                                  const JointLabel& first, const JointLabel& second) {
                return -std::log(std::max(probs[0][first.object], kLogFloor)) -
                       std::log(std::max(probs[1][second.object], kLogFloor)) -
                       std::log(std::max(probs[2][first.scp], kLogFloor)) -
                       std::log(std::max(probs[3][second.scp], kLogFloor));
            };
            for (std::size_t ai = 0; ai < da.size(); ++ai)
                for (std::size_t bi = 0; bi < db.size(); ++bi)
                    edge.table[ai * db.size() + bi] =
                        lambda_e * (head_energy(probs_ij, da[ai], db[bi]) +
                                    head_energy(probs_ji, db[bi], da[ai]));
            fg.edges.push_back(std::move(edge));
        }
    }
    return fg;
}

double evaluate_energy(const FactorGraph& fg, const std::vector<int>& domain_indices) {
    if (domain_indices.size() != fg.nodes.size())
        throw std::invalid_argument("crf: assignment length mismatch");
    double energy = 0.0;
    for (std::size_t i = 0; i < fg.nodes.size(); ++i) {
        const int a = domain_indices[i];
        if (a < 0 || a >= static_cast<int>(fg.nodes[i].domain.size()))
            throw std::out_of_range("crf: domain index out of range");
        energy += fg.nodes[i].unary[a];
    }
    for (const FactorEdge& e : fg.edges)
        energy += e.table[static_cast<std::size_t>(domain_indices[e.a]) *
                              fg.nodes[e.b].domain.size() +
                          domain_indices[e.b]];
    return energy;
}

Labeling lbp_map(const FactorGraph& fg, int max_iters, double damping, double tol) {
    const int n = static_cast<int>(fg.nodes.size());
    if (max_iters < 1) throw std::invalid_argument("crf: max_iters must be >= 1");
    if (damping < 0.0 || damping >= 1.0) throw std::invalid_argument("crf: damping must lie in [0,1)");
    if (tol <= 0.0) throw std::invalid_argument("crf: tol must be positive");

    // directed messages, one per edge orientation, over the target's domain
    struct Message {
        int from, to, edge;
        bool forward;  // true: a -> b (table rows index `from`)
        std::vector<double> stored, prev_proposal, proposal;
    };
    std::vector<Message> messages;
    std::vector<std::vector<int>> incoming(n);  // message ids targeting each node
    for (std::size_t e = 0; e < fg.edges.size(); ++e) {
        const FactorEdge& edge = fg.edges[e];
        for (int dir = 0; dir < 2; ++dir) {
            Message m;
            m.from = dir == 0 ? edge.a : edge.b;
            m.to = dir == 0 ? edge.b : edge.a;
            m.edge = static_cast<int>(e);
            m.forward = dir == 0;
            m.stored.assign(fg.nodes[m.to].domain.size(), 0.0);
            m.prev_proposal = m.stored;
            m.proposal = m.stored;
            incoming[m.to].push_back(static_cast<int>(messages.size()));
            messages.push_back(std::move(m));
        }
    }

    Labeling result;
    bool have_best = false;
    std::vector<int> decoded(n);
    // Anytime decode: belief argmin (ties to the lowest index) under the
    // current stored messages; the lowest-energy decode seen wins, ties going
    // to the latest so converged runs report the fixed-point decode.
    auto track_decode = [&] {
        for (int i = 0; i < n; ++i) {
            std::vector<double> belief(fg.nodes[i].unary);
            for (int mid : incoming[i])
                for (std::size_t a = 0; a < belief.size(); ++a)
                    belief[a] += messages[mid].stored[a];
            int best = 0;
            for (std::size_t a = 1; a < belief.size(); ++a)
                if (belief[a] < belief[best]) best = static_cast<int>(a);
            decoded[i] = best;
        }
        const double energy = evaluate_energy(fg, decoded);
        if (!have_best || energy <= result.total_energy) {
            result.domain_indices = decoded;
            result.total_energy = energy;
            have_best = true;
        }
    };

    int iter = 0;
    for (iter = 1; iter <= max_iters; ++iter) {
        double max_change = 0.0;
        for (Message& m : messages) {
            const FactorNode& src = fg.nodes[m.from];
            const FactorEdge& edge = fg.edges[m.edge];
            const std::size_t nb = fg.nodes[edge.b].domain.size();
            // unary plus stored messages from every neighbour except the target
            std::vector<double> base(src.unary);
            for (int mid : incoming[m.from]) {
                const Message& in = messages[mid];
                if (in.from == m.to) continue;
                for (std::size_t a = 0; a < base.size(); ++a) base[a] += in.stored[a];
            }
            for (std::size_t b = 0; b < m.proposal.size(); ++b) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t a = 0; a < base.size(); ++a) {
                    const double t = m.forward ? edge.table[a * nb + b] : edge.table[b * nb + a];
                    best = std::min(best, base[a] + t);
                }
                m.proposal[b] = best;
            }
            const double lo = *std::min_element(m.proposal.begin(), m.proposal.end());
            for (double& v : m.proposal) v -= lo;
            for (std::size_t b = 0; b < m.proposal.size(); ++b)
                max_change = std::max(max_change, std::abs(m.proposal[b] - m.prev_proposal[b]));
        }
        if (max_change < tol) {
            // proposals are stable: adopt them as the fixed point
            for (Message& m : messages) m.stored = m.proposal;
            result.converged = true;
            track_decode();
            break;
        }
        for (Message& m : messages) {
            for (std::size_t b = 0; b < m.stored.size(); ++b)
                m.stored[b] = damping * m.stored[b] + (1.0 - damping) * m.proposal[b];
            m.prev_proposal = m.proposal;
        }
        track_decode();
    }
    result.iterations = std::min(iter, max_iters);

    if (!have_best) track_decode();
    result.labels.resize(n);
    for (int i = 0; i < n; ++i)
        result.labels[i] = fg.nodes[i].domain[result.domain_indices[i]];
    return result;
}

Labeling brute_force_map(const FactorGraph& fg) {
    const int n = static_cast<int>(fg.nodes.size());
    if (n == 0) throw std::invalid_argument("crf: empty graph");
    double space = 1.0;
    for (const FactorNode& node : fg.nodes) space *= static_cast<double>(node.domain.size());
    if (space > 1e7) throw std::runtime_error("crf: brute-force search space exceeds 1e7");

    std::vector<int> assignment(n, 0), best_assignment(n, 0);
    double best_energy = evaluate_energy(fg, assignment);
    // lexicographic odometer, node 0 most significant; strict improvement
    // keeps the lexicographically smallest optimum
    while (true) {
        int pos = n - 1;
        while (pos >= 0 &&
               assignment[pos] + 1 >= static_cast<int>(fg.nodes[pos].domain.size())) {
            assignment[pos] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++assignment[pos];
        const double energy = evaluate_energy(fg, assignment);
        if (energy < best_energy) {
            best_energy = energy;
            best_assignment = assignment;
        }
    }

    Labeling result;
    result.domain_indices = best_assignment;
    result.labels.resize(n);
    for (int i = 0; i < n; ++i) result.labels[i] = fg.nodes[i].domain[best_assignment[i]];
    result.total_energy = best_energy;
    result.iterations = 0;
    result.converged = true;
    return result;
}

void decode_into(const SegmentGroup& group, const Labeling& labeling, const LabelGrammar& grammar,
                 LabelMap& object_map, LabelMap& part_map) {
    if (labeling.labels.size() != group.segments.size())
        throw std::invalid_argument("crf: labeling does not match group");
    if (object_map.height != part_map.height || object_map.width != part_map.width)
        throw std::invalid_argument("crf: canvas size mismatch");
    for (std::size_t i = 0; i < group.segments.size(); ++i) {
        const JointLabel& jl = labeling.labels[i];
        const std::uint32_t part =
            static_cast<std::uint32_t>(grammar.part_label_index(jl.object, jl.scp));
        const std::uint32_t object = static_cast<std::uint32_t>(jl.object);
        for (const Pixel& p : group.segments[i].pixels) {
            if (p.row < 0 || p.row >= object_map.height || p.col < 0 || p.col >= object_map.width)
                throw std::invalid_argument("crf: segment pixel outside the canvas");
            if (object_map.at(p.row, p.col) != 0 || part_map.at(p.row, p.col) != 0)
                throw std::logic_error("crf: segments overlap while painting");
            if (object != 0) {
                object_map.at(p.row, p.col) = object;
                part_map.at(p.row, p.col) = part;
            }
        }
    }
}

std::pair<LabelMap, LabelMap> decode_maps(const SegmentGroup& group, const Labeling& labeling,
                                          const LabelGrammar& grammar, int height, int width) {
    LabelMap object_map(height, width);
    LabelMap part_map(height, width);
    decode_into(group, labeling, grammar, object_map, part_map);
    return {std::move(object_map), std::move(part_map)};
}

}  // namespace partseg
