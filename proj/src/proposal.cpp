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

#include "partseg/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace partseg {

namespace {

constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, -1, 1};

struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

LabelMap argmax_labels(const PotentialMap& potentials) {
    if (potentials.channels < 1) throw std::invalid_argument("proposal: potential map has no channels");
    LabelMap out(potentials.height, potentials.width);
    for (int r = 0; r < potentials.height; ++r) {
        for (int c = 0; c < potentials.width; ++c) {
            int best = 0;
            float best_v = potentials.at(r, c, 0);
            for (int ch = 1; ch < potentials.channels; ++ch) {
                const float v = potentials.at(r, c, ch);
                if (v > best_v) {
                    best_v = v;
                    best = ch;
                }
            }
            out.at(r, c) = static_cast<std::uint32_t>(best);
        }
    }
    return out;
}

std::vector<Segment> connected_components(const LabelMap& labels, std::size_t min_area) {
    const int h = labels.height, w = labels.width;
    std::vector<int> component(static_cast<std::size_t>(h) * w, -1);
    std::vector<Segment> segments;
    std::vector<Pixel> queue;

    // row-major scan makes discovery order the top-left pixel order
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * w + c;
            if (component[idx] >= 0) continue;
            const std::uint32_t label = labels.at(r, c);
            if (label == 0) continue;

            const int id = static_cast<int>(segments.size());
            Segment seg;
            seg.scp = label;
            component[idx] = id;
            queue.clear();
            queue.push_back({r, c});
            for (std::size_t head = 0; head < queue.size(); ++head) {
                const Pixel p = queue[head];
                seg.pixels.push_back(p);
                for (int k = 0; k < 4; ++k) {
                    const int nr = p.row + kDr[k], nc = p.col + kDc[k];
                    if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                    const std::size_t nidx = static_cast<std::size_t>(nr) * w + nc;
                    if (component[nidx] >= 0 || labels.at(nr, nc) != label) continue;
                    component[nidx] = id;
                    queue.push_back({nr, nc});
                }
            }
            std::sort(seg.pixels.begin(), seg.pixels.end());
            segments.push_back(std::move(seg));
        }
    }

    if (min_area > 0)
        std::erase_if(segments, [min_area](const Segment& s) { return s.area() < min_area; });

    for (std::size_t i = 0; i < segments.size(); ++i) {
        Segment& seg = segments[i];
        seg.id = static_cast<int>(i);
        seg.bbox = {h, w, -1, -1};
        double sum_r = 0.0, sum_c = 0.0;
        for (const Pixel& p : seg.pixels) {
            seg.bbox.min_row = std::min(seg.bbox.min_row, p.row);
            seg.bbox.min_col = std::min(seg.bbox.min_col, p.col);
            seg.bbox.max_row = std::max(seg.bbox.max_row, p.row);
            seg.bbox.max_col = std::max(seg.bbox.max_col, p.col);
            sum_r += p.row;
            sum_c += p.col;
        }
        seg.centroid_row = sum_r / static_cast<double>(seg.area());
        seg.centroid_col = sum_c / static_cast<double>(seg.area());
        // components are maximal, so a same-label 4-neighbour is always a member
        for (const Pixel& p : seg.pixels) {
            bool on_boundary = false;
            for (int k = 0; k < 4 && !on_boundary; ++k) {
                const int nr = p.row + kDr[k], nc = p.col + kDc[k];
                if (nr < 0 || nr >= h || nc < 0 || nc >= w || labels.at(nr, nc) != seg.scp)
                    on_boundary = true;
            }
            if (on_boundary) seg.boundary.push_back(p);
        }
    }
    return segments;
}

double boundary_distance(const Segment& a, const Segment& b, DistanceMetric metric) {
    if (a.boundary.empty() || b.boundary.empty())
        throw std::invalid_argument("proposal: segment without boundary pixels");
    double best = std::numeric_limits<double>::infinity();
    for (const Pixel& p : a.boundary) {
        for (const Pixel& q : b.boundary) {
            const double dr = p.row - q.row, dc = p.col - q.col;
            const double d = metric == DistanceMetric::kEuclidean ? dr * dr + dc * dc
                                                                  : std::abs(dr) + std::abs(dc);
            if (d < best) {
                best = d;
                if (best == 0.0) return 0.0;
            }
        }
    }
    return metric == DistanceMetric::kEuclidean ? std::sqrt(best) : best;
}

std::vector<SegmentGroup> group_segments(const std::vector<Segment>& segments, double threshold,
                                         DistanceMetric metric) {
    if (threshold <= 0.0) throw std::invalid_argument("proposal: grouping threshold must be positive");
    const int n = static_cast<int>(segments.size());
    UnionFind uf(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (uf.find(i) != uf.find(j) &&
                boundary_distance(segments[i], segments[j], metric) < threshold)
                uf.unite(i, j);

    std::vector<int> root_to_group(n, -1);
    std::vector<SegmentGroup> groups;
    for (int i = 0; i < n; ++i) {
        const int root = uf.find(i);
        if (root_to_group[root] < 0) {
            root_to_group[root] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[root_to_group[root]].segments.push_back(segments[i]);
    }
    for (SegmentGroup& g : groups) {
        std::sort(g.segments.begin(), g.segments.end(),
                  [](const Segment& a, const Segment& b) {
                      return a.pixels.front() < b.pixels.front();
                  });
        g.bbox = g.segments.front().bbox;
        g.object_area = 0;
        for (const Segment& s : g.segments) {
            g.bbox.min_row = std::min(g.bbox.min_row, s.bbox.min_row);
            g.bbox.min_col = std::min(g.bbox.min_col, s.bbox.min_col);
            g.bbox.max_row = std::max(g.bbox.max_row, s.bbox.max_row);
            g.bbox.max_col = std::max(g.bbox.max_col, s.bbox.max_col);
            g.object_area += s.area();
        }
    }
    std::stable_sort(groups.begin(), groups.end(), [](const SegmentGroup& a, const SegmentGroup& b) {
        if (a.bbox.min_row != b.bbox.min_row) return a.bbox.min_row < b.bbox.min_row;
        if (a.bbox.min_col != b.bbox.min_col) return a.bbox.min_col < b.bbox.min_col;
        return a.segments.front().pixels.front() < b.segments.front().pixels.front();
    });
    return groups;
}

std::string describe_segments(const std::vector<Segment>& segments) {
    std::ostringstream out;
    for (const Segment& s : segments)
        out << "segment " << s.id << " scp=" << s.scp << " area=" << s.area() << " centroid=("
            << s.centroid_row << "," << s.centroid_col << ") bbox=[" << s.bbox.min_row << ","
            << s.bbox.min_col << "," << s.bbox.max_row << "," << s.bbox.max_col << "]\n";
    return out.str();
}

}  // namespace partseg
