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

#include "partseg/tensor.hpp"

namespace partseg {

struct Pixel {
    int row = 0;
    int col = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
    // row-major order
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

struct BBox {
    int min_row = 0;
    int min_col = 0;
    int max_row = 0;
    int max_col = 0;

    int height() const { return max_row - min_row + 1; }
    int width() const { return max_col - min_col + 1; }
};

// A maximal 4-connected region of pixels sharing one non-background SCP
// label.  `pixels` is sorted row-major; `boundary` keeps the subset with at
// least one 4-neighbour outside the segment (image border counts as outside).
struct Segment {
    int id = 0;
    std::uint32_t scp = 0;
    std::vector<Pixel> pixels;
    std::vector<Pixel> boundary;
    BBox bbox;
    double centroid_row = 0.0;
    double centroid_col = 0.0;

    std::size_t area() const { return pixels.size(); }
};

// Segments whose boundaries chain together within the grouping threshold.
// `object_area` is the pixel count of the union; segments never overlap, so
// it equals the sum of member areas.
struct SegmentGroup {
    std::vector<Segment> segments;
    BBox bbox;
    std::size_t object_area = 0;
};

enum class DistanceMetric {
    kEuclidean,
    kCityBlock,
};

// Per-pixel argmax over channels; ties resolve to the lowest channel.
LabelMap argmax_labels(const PotentialMap& potentials);

// Maximal 4-connected components of identical non-background labels, ordered
// by top-left pixel; components smaller than `min_area` are dropped.  Ids are
// assigned sequentially in the returned order.
std::vector<Segment> connected_components(const LabelMap& labels, std::size_t min_area = 0);

// Minimum pairwise distance between the two boundary pixel sets.
double boundary_distance(const Segment& a, const Segment& b,
                         DistanceMetric metric = DistanceMetric::kEuclidean);

// Single-linkage clustering: two segments share a group iff they are joined
// by a chain of segments with boundary distance strictly below `threshold`.
// Groups are ordered by top-left bbox; segments within a group by top-left
// pixel.
std::vector<SegmentGroup> group_segments(const std::vector<Segment>& segments, double threshold,
                                         DistanceMetric metric = DistanceMetric::kEuclidean);

// One line per segment (id, scp, area, centroid, bbox), for debugging.
std::string describe_segments(const std::vector<Segment>& segments);

}  // namespace partseg
