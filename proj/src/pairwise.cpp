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

#include "partseg/pairwise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "partseg/binary_io.hpp"

namespace partseg {

namespace {

constexpr const char* kPairwiseMagic = "PARTSEGPAIRNN01";
constexpr double kLogFloor = 1e-12;

std::vector<double> softmax(std::span<const double> z) {
    std::vector<double> p(z.begin(), z.end());
    const double zmax = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for (double& v : p) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
}

// hidden pre-activations, ReLU applied in place by the caller when needed
std::vector<double> hidden_preact(const PairwiseModel& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.input_dim)
        throw std::invalid_argument("pairwise: feature dimension mismatch");
    std::vector<double> h(m.b1);
    for (int i = 0; i < m.input_dim; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* w = &m.w1[static_cast<std::size_t>(i) * m.hidden_dim];
        for (int j = 0; j < m.hidden_dim; ++j) h[j] += xi * w[j];
    }
    return h;
}

}  // namespace

EdgeMap compute_edge_map(const PotentialMap& source) {
    if (source.height < 2 || source.width < 2)
        throw std::invalid_argument("edge map: input smaller than 2x2");
    const int h = source.height, w = source.width;

    // scalar field: per-pixel maximum probability
    std::vector<double> field(static_cast<std::size_t>(h) * w, 0.0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            float best = source.at(r, c, 0);
            for (int ch = 1; ch < source.channels; ++ch) best = std::max(best, source.at(r, c, ch));
            field[static_cast<std::size_t>(r) * w + c] = best;
        }

    EdgeMap out;
    out.height = h;
    out.width = w;
    out.values.resize(field.size());
    auto f = [&](int r, int c) { return field[static_cast<std::size_t>(r) * w + c]; };
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            // central differences with clamped borders
            const double dr = (f(std::min(r + 1, h - 1), c) - f(std::max(r - 1, 0), c)) / 2.0;
            const double dc = (f(r, std::min(c + 1, w - 1)) - f(r, std::max(c - 1, 0))) / 2.0;
            const double g = std::sqrt(dr * dr + dc * dc);
            out.at(r, c) = g;
            lo = std::min(lo, g);
            hi = std::max(hi, g);
        }
    const double range = hi - lo;
    for (double& v : out.values) v = range > 0.0 ? (v - lo) / range : 0.0;
    return out;
}

EdgeWeightGraph build_edge_weight_graph(const SegmentGroup& group, const EdgeMap& edges) {
    const int n = static_cast<int>(group.segments.size());
    EdgeWeightGraph g;
    g.num_nodes = n;
    g.adjacency.resize(n);

    // pixel -> segment index within the group
    std::vector<int> owner(static_cast<std::size_t>(edges.height) * edges.width, -1);
    for (int i = 0; i < n; ++i)
        for (const Pixel& p : group.segments[i].pixels) {
            if (p.row < 0 || p.row >= edges.height || p.col < 0 || p.col >= edges.width)
                throw std::invalid_argument("edge graph: segment pixel outside the edge map");
            owner[static_cast<std::size_t>(p.row) * edges.width + p.col] = i;
        }

    // shared boundary of (i, j) = pixels of either segment with a 4-neighbour
    // in the other; each pixel contributes once per edge
    constexpr int kDr[4] = {-1, 1, 0, 0};
    constexpr int kDc[4] = {0, 0, -1, 1};
    std::vector<double> weight(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<bool> touching(static_cast<std::size_t>(n) * n, false);
    std::vector<int> seen;
    for (int i = 0; i < n; ++i) {
        for (const Pixel& p : group.segments[i].boundary) {
            seen.clear();
            for (int k = 0; k < 4; ++k) {
                const int nr = p.row + kDr[k], nc = p.col + kDc[k];
                if (nr < 0 || nr >= edges.height || nc < 0 || nc >= edges.width) continue;
                const int j = owner[static_cast<std::size_t>(nr) * edges.width + nc];
                if (j < 0 || j == i) continue;
                if (std::find(seen.begin(), seen.end(), j) != seen.end()) continue;
                seen.push_back(j);
                weight[static_cast<std::size_t>(std::min(i, j)) * n + std::max(i, j)] +=
                    edges.at(p.row, p.col);
                touching[static_cast<std::size_t>(std::min(i, j)) * n + std::max(i, j)] = true;
            }
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * n + j;
            if (!touching[idx]) continue;
            g.adjacency[i].push_back({j, weight[idx]});
            g.adjacency[j].push_back({i, weight[idx]});
            g.total_weight += weight[idx];
        }
    return g;
}

double geodesic_distance(const EdgeWeightGraph& g, int i, int j) {
    if (i < 0 || i >= g.num_nodes || j < 0 || j >= g.num_nodes)
        throw std::out_of_range("geodesic: unknown segment id");
    if (i == j) return 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(g.num_nodes, inf);
    dist[i] = 0.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.push({0.0, i});
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        if (u == j) return d;
        for (const auto& [v, w] : g.adjacency[u]) {
            const double nd = d + w;
            if (nd < dist[v]) {
                dist[v] = nd;
                heap.push({nd, v});
            }
        }
    }
    return g.total_weight + 1.0;
}

SegmentDescriptor compute_descriptor(const Segment& segment, const SegmentGroup& group,
                                     const PotentialMap& object_potentials,
                                     const PotentialMap& scp_potentials) {
    if (group.object_area == 0) throw std::invalid_argument("descriptor: empty group");
    SegmentDescriptor d;
    d.mean_object_potentials.assign(object_potentials.channels, 0.0);
    d.mean_scp_potentials.assign(scp_potentials.channels, 0.0);
    for (const Pixel& p : segment.pixels) {
        for (int ch = 0; ch < object_potentials.channels; ++ch)
            d.mean_object_potentials[ch] += object_potentials.at(p.row, p.col, ch);
        for (int ch = 0; ch < scp_potentials.channels; ++ch)
            d.mean_scp_potentials[ch] += scp_potentials.at(p.row, p.col, ch);
    }
    const double inv = 1.0 / static_cast<double>(segment.area());
    for (double& v : d.mean_object_potentials) v *= inv;
    for (double& v : d.mean_scp_potentials) v *= inv;
    d.normalized_area = static_cast<double>(segment.area()) / static_cast<double>(group.object_area);
    return d;
}

std::vector<double> PairwiseFeatures::to_vector() const {
    std::vector<double> v;
    v.reserve(desc_i.mean_object_potentials.size() * 2 + desc_i.mean_scp_potentials.size() * 2 + 6);
    auto append = [&v](const SegmentDescriptor& d) {
        v.insert(v.end(), d.mean_object_potentials.begin(), d.mean_object_potentials.end());
        v.insert(v.end(), d.mean_scp_potentials.begin(), d.mean_scp_potentials.end());
        v.push_back(d.normalized_area);
    };
    append(desc_i);
    append(desc_j);
    v.push_back(geodesic);
    v.push_back(euclidean);
    v.push_back(angle_sin);
    v.push_back(angle_cos);
    return v;
}

int PairwiseFeatures::dimension(int num_object_labels, int num_scp_labels) {
    return 2 * (num_object_labels + num_scp_labels + 1) + 4;
}

PairwiseFeatures compute_pairwise_features(const SegmentGroup& group,
                                           const PotentialMap& object_potentials,
                                           const PotentialMap& scp_potentials,
                                           const EdgeWeightGraph& graph, int i, int j) {
    const int n = static_cast<int>(group.segments.size());
    if (i < 0 || i >= n || j < 0 || j >= n) throw std::out_of_range("features: segment index");
    if (i == j) throw std::invalid_argument("features: i and j must differ");
    if (group.bbox.height() <= 0 || group.bbox.width() <= 0)
        throw std::invalid_argument("features: degenerate group bbox");

    const Segment& si = group.segments[i];
    const Segment& sj = group.segments[j];
    PairwiseFeatures f;
    f.desc_i = compute_descriptor(si, group, object_potentials, scp_potentials);
    f.desc_j = compute_descriptor(sj, group, object_potentials, scp_potentials);
    f.geodesic = geodesic_distance(graph, i, j);

    const double drow = sj.centroid_row - si.centroid_row;
    const double dcol = sj.centroid_col - si.centroid_col;
    const double nr = drow / static_cast<double>(group.bbox.height());
    const double nc = dcol / static_cast<double>(group.bbox.width());
    f.euclidean = std::sqrt(nr * nr + nc * nc);
    if (drow == 0.0 && dcol == 0.0) {
        f.angle_sin = 0.0;
        f.angle_cos = 1.0;
    } else {
        const double theta = std::atan2(drow, dcol);
        f.angle_sin = std::sin(theta);
        f.angle_cos = std::cos(theta);
    }
    return f;
}

PairwiseModel init_pairwise_model(int input_dim, int num_object_labels, int num_scp_labels,
                                  std::uint64_t seed, int hidden_dim) {
    if (input_dim < 1 || hidden_dim < 1)
        throw std::invalid_argument("pairwise: dimensions must be positive");
    if (num_object_labels < 2 || num_scp_labels < 2)
        throw std::invalid_argument("pairwise: label spaces need background plus one label");
    PairwiseModel m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.w1.resize(static_cast<std::size_t>(input_dim) * hidden_dim);
    m.b1.assign(hidden_dim, 0.0);
    const int head_dims[4] = {num_object_labels, num_object_labels, num_scp_labels, num_scp_labels};
    std::mt19937_64 rng(seed);
    const double bound1 = std::sqrt(6.0 / (input_dim + hidden_dim));
    std::uniform_real_distribution<double> u1(-bound1, bound1);
    for (double& w : m.w1) w = u1(rng);
    for (int h = 0; h < 4; ++h) {
        m.heads[h].out_dim = head_dims[h];
        m.heads[h].w.resize(static_cast<std::size_t>(hidden_dim) * head_dims[h]);
        m.heads[h].b.assign(head_dims[h], 0.0);
        const double bound = std::sqrt(6.0 / (hidden_dim + head_dims[h]));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (double& w : m.heads[h].w) w = u(rng);
    }
    return m;
}

std::array<std::vector<double>, 4> model_forward(const PairwiseModel& m,
                                                 std::span<const double> features) {
    std::vector<double> h = hidden_preact(m, features);
    for (double& v : h) v = std::max(v, 0.0);
    std::array<std::vector<double>, 4> out;
    for (int k = 0; k < 4; ++k) {
        const auto& head = m.heads[k];
        std::vector<double> z(head.b);
        for (int i = 0; i < m.hidden_dim; ++i) {
            const double hi = h[i];
            if (hi == 0.0) continue;
            const double* w = &head.w[static_cast<std::size_t>(i) * head.out_dim];
            for (int o = 0; o < head.out_dim; ++o) z[o] += hi * w[o];
        }
        out[k] = softmax(z);
    }
    return out;
}

double pairwise_loss_and_grad(const PairwiseModel& m, std::span<const PairwiseSample> samples,
                              PairwiseModel* grad, std::mt19937_64* rng) {
    if (samples.empty()) throw std::runtime_error("pairwise: empty sample set");
    if (grad) {
        grad->input_dim = m.input_dim;
        grad->hidden_dim = m.hidden_dim;
        grad->dropout_rate = m.dropout_rate;
        grad->w1.assign(m.w1.size(), 0.0);
        grad->b1.assign(m.b1.size(), 0.0);
        for (int k = 0; k < 4; ++k) {
            grad->heads[k].out_dim = m.heads[k].out_dim;
            grad->heads[k].w.assign(m.heads[k].w.size(), 0.0);
            grad->heads[k].b.assign(m.heads[k].b.size(), 0.0);
        }
    }

    std::bernoulli_distribution keep(1.0 - m.dropout_rate);
    const double inv_keep = m.dropout_rate < 1.0 ? 1.0 / (1.0 - m.dropout_rate) : 0.0;
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    double loss = 0.0;
    std::vector<double> h, mask, dh;
    for (const PairwiseSample& s : samples) {
        h = hidden_preact(m, s.features);
        // inverted dropout on the post-ReLU activations
        mask.assign(m.hidden_dim, 1.0);
        if (rng && m.dropout_rate > 0.0)
            for (double& v : mask) v = keep(*rng) ? inv_keep : 0.0;
        std::vector<double> relu(h);
        for (double& v : relu) v = std::max(v, 0.0);
        std::vector<double> act(relu);
        for (int i = 0; i < m.hidden_dim; ++i) act[i] *= mask[i];

        dh.assign(m.hidden_dim, 0.0);
        for (int k = 0; k < 4; ++k) {
            const auto& head = m.heads[k];
            const int label = s.labels[k];
            if (label < 0 || label >= head.out_dim)
                throw std::runtime_error("pairwise: ground-truth label out of range");
            std::vector<double> z(head.b);
            for (int i = 0; i < m.hidden_dim; ++i) {
                const double a = act[i];
                if (a == 0.0) continue;
                const double* w = &head.w[static_cast<std::size_t>(i) * head.out_dim];
                for (int o = 0; o < head.out_dim; ++o) z[o] += a * w[o];
            }
            std::vector<double> p = softmax(z);
            loss += -std::log(std::max(p[label], kLogFloor)) * inv_n;
            if (!grad) continue;
            for (int o = 0; o < head.out_dim; ++o) {
                const double delta = (p[o] - (o == label ? 1.0 : 0.0)) * inv_n;
                grad->heads[k].b[o] += delta;
                for (int i = 0; i < m.hidden_dim; ++i) {
                    if (act[i] != 0.0)
                        grad->heads[k].w[static_cast<std::size_t>(i) * head.out_dim + o] +=
                            delta * act[i];
                    dh[i] += delta * head.w[static_cast<std::size_t>(i) * head.out_dim + o];
                }
            }
        }
        if (!grad) continue;
        for (int i = 0; i < m.hidden_dim; ++i) {
            const double upstream = h[i] > 0.0 ? dh[i] * mask[i] : 0.0;
            if (upstream == 0.0) continue;
            grad->b1[i] += upstream;
            for (int in = 0; in < m.input_dim; ++in)
                grad->w1[static_cast<std::size_t>(in) * m.hidden_dim + i] +=
                    upstream * s.features[in];
        }
    }
    return loss;
}

PairwiseModel train_pairwise_model(const std::vector<PairwiseSample>& samples,
                                   int num_object_labels, int num_scp_labels,
                                   const TrainConfig& cfg, std::vector<double>* loss_log,
                                   double dropout_rate, int hidden_dim) {
    if (samples.empty()) throw std::runtime_error("pairwise: empty sample set");
    if (cfg.learning_rate <= 0.0) throw std::runtime_error("pairwise: learning rate must be positive");
    if (cfg.batch_size < 1) throw std::runtime_error("pairwise: batch size must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::runtime_error("pairwise: dropout rate must lie in [0,1)");

    const int input_dim = static_cast<int>(samples.front().features.size());
    PairwiseModel m = init_pairwise_model(input_dim, num_object_labels, num_scp_labels, cfg.seed,
                                          hidden_dim);
    m.dropout_rate = dropout_rate;

    std::mt19937_64 rng(cfg.seed + 1);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    const bool full_batch = cfg.batch_size >= static_cast<int>(samples.size());

    PairwiseModel grad;
    auto apply = [&](const PairwiseModel& g) {
        for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= cfg.learning_rate * g.w1[i];
        for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= cfg.learning_rate * g.b1[i];
        for (int k = 0; k < 4; ++k) {
            for (std::size_t i = 0; i < m.heads[k].w.size(); ++i)
                m.heads[k].w[i] -= cfg.learning_rate * g.heads[k].w[i];
            for (std::size_t i = 0; i < m.heads[k].b.size(); ++i)
                m.heads[k].b[i] -= cfg.learning_rate * g.heads[k].b[i];
        }
    };

    if (loss_log) {
        loss_log->clear();
        loss_log->push_back(pairwise_loss_and_grad(m, samples));
    }
    std::mt19937_64* drop = dropout_rate > 0.0 ? &rng : nullptr;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        double epoch_loss;
        if (full_batch) {
            epoch_loss = pairwise_loss_and_grad(m, samples, &grad, drop);
            apply(grad);
        } else {
            std::shuffle(order.begin(), order.end(), rng);
            epoch_loss = 0.0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
                std::vector<PairwiseSample> batch(stop - start);
                for (std::size_t i = start; i < stop; ++i) batch[i - start] = samples[order[i]];
                epoch_loss += pairwise_loss_and_grad(m, batch, &grad, drop) *
                              static_cast<double>(batch.size());
                apply(grad);
            }
            epoch_loss /= static_cast<double>(samples.size());
        }
        if (std::isnan(epoch_loss))
            throw std::runtime_error("pairwise: loss diverged to NaN at epoch " +
                                     std::to_string(epoch));
        if (loss_log) loss_log->push_back(pairwise_loss_and_grad(m, samples));
    }
    return m;
}

double pairwise_potential(const PairwiseModel& m, std::span<const double> features,
                          const std::array<int, 4>& labels) {
    const auto probs = model_forward(m, features);
    double energy = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (labels[k] < 0 || labels[k] >= m.heads[k].out_dim)
            throw std::out_of_range("pairwise: label out of range");
        energy += -std::log(std::max(probs[k][labels[k]], kLogFloor));
    }
    return energy;
}

void save_pairwise_model(const PairwiseModel& m, const std::string& path) {
    auto out = io::open_out(path);
    io::write_magic(out, kPairwiseMagic);
    io::write_u32(out, static_cast<std::uint32_t>(m.input_dim));
    io::write_u32(out, static_cast<std::uint32_t>(m.hidden_dim));
    for (int k = 0; k < 4; ++k) io::write_u32(out, static_cast<std::uint32_t>(m.heads[k].out_dim));
    io::write_f32(out, static_cast<float>(m.dropout_rate));
    for (double v : m.w1) io::write_f32(out, static_cast<float>(v));
    for (double v : m.b1) io::write_f32(out, static_cast<float>(v));
    for (int k = 0; k < 4; ++k) {
        for (double v : m.heads[k].w) io::write_f32(out, static_cast<float>(v));
        for (double v : m.heads[k].b) io::write_f32(out, static_cast<float>(v));
    }
    if (!out) throw std::runtime_error("pairwise: write failed for '" + path + "'");
}

PairwiseModel load_pairwise_model(const std::string& path) {
    auto in = io::open_in(path);
    io::check_magic(in, kPairwiseMagic, "pairwise model");
    PairwiseModel m;
    m.input_dim = static_cast<int>(io::read_u32(in));
    m.hidden_dim = static_cast<int>(io::read_u32(in));
    if (m.input_dim < 1 || m.hidden_dim < 1)
        throw std::runtime_error("pairwise model: invalid dimensions in file");
    int head_dims[4];
    for (int k = 0; k < 4; ++k) {
        head_dims[k] = static_cast<int>(io::read_u32(in));
        if (head_dims[k] < 1) throw std::runtime_error("pairwise model: invalid head dimension");
    }
    if (head_dims[0] != head_dims[1] || head_dims[2] != head_dims[3])
        throw std::runtime_error("pairwise model: head dimensions must pair up");
    m.dropout_rate = io::read_f32(in);
    m.w1.resize(static_cast<std::size_t>(m.input_dim) * m.hidden_dim);
    m.b1.resize(m.hidden_dim);
    for (double& v : m.w1) v = io::read_f32(in);
    for (double& v : m.b1) v = io::read_f32(in);
    for (int k = 0; k < 4; ++k) {
        m.heads[k].out_dim = head_dims[k];
        m.heads[k].w.resize(static_cast<std::size_t>(m.hidden_dim) * head_dims[k]);
        m.heads[k].b.resize(head_dims[k]);
        for (double& v : m.heads[k].w) v = io::read_f32(in);
        for (double& v : m.heads[k].b) v = io::read_f32(in);
    }
    auto finite = [](std::span<const double> vs) {
        return std::all_of(vs.begin(), vs.end(), [](double v) { return std::isfinite(v); });
    };
    if (!finite(m.w1) || !finite(m.b1))
        throw std::runtime_error("pairwise model: non-finite weight in file");
    for (int k = 0; k < 4; ++k)
        if (!finite(m.heads[k].w) || !finite(m.heads[k].b))
            throw std::runtime_error("pairwise model: non-finite weight in file");
    return m;
}

}  // namespace partseg
