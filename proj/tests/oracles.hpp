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

// Independent reference implementations used only to cross-check the library.
// Deliberately naive: direct definitions, no shared code with the production
// paths they verify.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "partseg/tensor.hpp"

namespace oracles {

// Zero-padded convolution + bias, written as four nested loops straight from
// the definition. Input channels are the scp map followed by the object map.
inline std::vector<double> naive_conv(const partseg::PotentialMap& scp,
                                      const partseg::PotentialMap& obj,
                                      const std::vector<double>& kernel,
                                      const std::vector<double>& bias, int k) {
    const int h = scp.height, w = scp.width;
    const int c_in = scp.channels + obj.channels;
    const int c_out = obj.channels;
    const int half = k / 2;
    auto input_at = [&](int r, int c, int ci) -> double {
        if (r < 0 || r >= h || c < 0 || c >= w) return 0.0;
        if (ci < scp.channels) return scp.at(r, c, ci);
        return obj.at(r, c, ci - scp.channels);
    };
    std::vector<double> out(static_cast<std::size_t>(h) * w * c_out);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int co = 0; co < c_out; ++co) {
                double acc = bias[co];
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx)
                        for (int ci = 0; ci < c_in; ++ci)
                            acc += kernel[((static_cast<std::size_t>(ky) * k + kx) * c_in + ci) *
                                              c_out +
                                          co] *
                                   input_at(r - half + ky, c - half + kx, ci);
                out[(static_cast<std::size_t>(r) * w + c) * c_out + co] = acc;
            }
    return out;
}

// 4-connected components of identical nonzero labels via depth-first flood
// fill. Returns a component id per pixel (-1 for background) plus the count;
// ids follow first-visit order of a row-major scan.
inline std::pair<std::vector<int>, int> flood_fill_components(const partseg::LabelMap& labels) {
    const int h = labels.height, w = labels.width;
    std::vector<int> comp(static_cast<std::size_t>(h) * w, -1);
    int next = 0;
    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            if (labels.at(r, c) == 0 || comp[static_cast<std::size_t>(r) * w + c] != -1) continue;
            const std::uint32_t want = labels.at(r, c);
            stack.push_back({r, c});
            comp[static_cast<std::size_t>(r) * w + c] = next;
            while (!stack.empty()) {
                auto [cr, cc] = stack.back();
                stack.pop_back();
                const int dr[] = {-1, 1, 0, 0};
                const int dc[] = {0, 0, -1, 1};
                for (int d = 0; d < 4; ++d) {
                    const int nr = cr + dr[d], nc = cc + dc[d];
                    if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                    auto& slot = comp[static_cast<std::size_t>(nr) * w + nc];
                    if (slot != -1 || labels.at(nr, nc) != want) continue;
                    slot = next;
                    stack.push_back({nr, nc});
                }
            }
            ++next;
        }
    return {comp, next};
}

// Exhaustive shortest path by enumerating every simple path. Exponential;
// keep graphs small.
inline double exhaustive_shortest_path(int n,
                                       const std::vector<std::vector<std::pair<int, double>>>& adj,
                                       int from, int to) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> visited(n, false);
    std::function<void(int, double)> dfs = [&](int at, double cost) {
        if (at == to) {
            best = std::min(best, cost);
            return;
        }
        visited[at] = true;
        for (auto [next, w] : adj[at])
            if (!visited[next]) dfs(next, cost + w);
        visited[at] = false;
    };
    dfs(from, 0.0);
    return best;
}

// Per-class intersection/union by direct pixel counting.
struct CountingIou {
    std::vector<double> iou;         // NaN where the class is absent from both
    double pixel_accuracy = 0.0;
};

inline CountingIou counting_iou(const partseg::LabelMap& pred, const partseg::LabelMap& gt,
                                int num_labels) {
    CountingIou out;
    out.iou.assign(num_labels, std::numeric_limits<double>::quiet_NaN());
    std::size_t correct = 0;
    for (int k = 0; k < num_labels; ++k) {
        std::size_t inter = 0, uni = 0;
        for (std::size_t i = 0; i < pred.labels.size(); ++i) {
            const bool p = pred.labels[i] == static_cast<std::uint32_t>(k);
            const bool g = gt.labels[i] == static_cast<std::uint32_t>(k);
            inter += p && g;
            uni += p || g;
        }
        if (uni > 0) out.iou[k] = static_cast<double>(inter) / static_cast<double>(uni);
    }
    for (std::size_t i = 0; i < pred.labels.size(); ++i) correct += pred.labels[i] == gt.labels[i];
    out.pixel_accuracy = static_cast<double>(correct) / static_cast<double>(pred.labels.size());
    return out;
}

// Central-difference gradient of an arbitrary scalar function of one
// parameter, for checking analytic gradients. h = 1e-3 unless overridden.
inline double numeric_grad(const std::function<double()>& loss, double* param, double h = 1e-3) {
    const double saved = *param;
    *param = saved + h;
    const double up = loss();
    *param = saved - h;
    const double down = loss();
    *param = saved;
    return (up - down) / (2.0 * h);
}

// Relative error with the agreed denominator floor.
inline double rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

}  // namespace oracles
