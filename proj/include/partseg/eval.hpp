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

#include <optional>
#include <string>
#include <vector>

#include "partseg/tensor.hpp"

namespace partseg {

struct EvalResult {
    int num_labels = 0;
    // IOU per class; empty optional when the class appears in neither map
    std::vector<std::optional<double>> per_class_iou;
    // mean over classes present in at least one map
    double mean_iou = 0.0;
    // fraction of matching pixels, background included
    double pixel_accuracy = 0.0;
    // binary IOU of the non-background masks; 1 when both are empty
    double foreground_iou = 0.0;
    // counts indexed [predicted][ground truth]
    std::vector<std::size_t> confusion;

    std::size_t confusion_at(int pred, int gt) const {
        return confusion[static_cast<std::size_t>(pred) * num_labels + gt];
    }
};

EvalResult iou(const LabelMap& pred, const LabelMap& gt, int num_labels);

// One line per class plus the aggregates, for CLI output.
std::string format_eval(const EvalResult& result, const std::vector<std::string>& label_names);

}  // namespace partseg
