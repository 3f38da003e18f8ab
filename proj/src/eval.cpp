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

#include "partseg/eval.hpp"

#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace partseg {

EvalResult iou(const LabelMap& pred, const LabelMap& gt, int num_labels) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw std::invalid_argument("eval: prediction and ground truth differ in size");
    if (num_labels < 1) throw std::invalid_argument("eval: num_labels must be positive");

    EvalResult result;
    result.num_labels = num_labels;
    result.confusion.assign(static_cast<std::size_t>(num_labels) * num_labels, 0);

    const std::size_t total = pred.labels.size();
    for (std::size_t i = 0; i < total; ++i) {
        const std::uint32_t p = pred.labels[i], g = gt.labels[i];
        if (p >= static_cast<std::uint32_t>(num_labels) || g >= static_cast<std::uint32_t>(num_labels))
            throw std::out_of_range("eval: label outside [0, num_labels)");
        ++result.confusion[static_cast<std::size_t>(p) * num_labels + g];
    }

    std::size_t trace = 0;
    double iou_sum = 0.0;
    int present = 0;
    result.per_class_iou.resize(num_labels);
    for (int k = 0; k < num_labels; ++k) {
        const std::size_t tp = result.confusion_at(k, k);
        trace += tp;
        std::size_t pred_count = 0, gt_count = 0;
        for (int other = 0; other < num_labels; ++other) {
            pred_count += result.confusion_at(k, other);
            gt_count += result.confusion_at(other, k);
        }
        const std::size_t uni = pred_count + gt_count - tp;
        if (uni == 0) continue;  // class absent from both maps
        result.per_class_iou[k] = static_cast<double>(tp) / static_cast<double>(uni);
        iou_sum += *result.per_class_iou[k];
        ++present;
    }
    result.mean_iou = present > 0 ? iou_sum / present : 0.0;
    result.pixel_accuracy = total > 0 ? static_cast<double>(trace) / static_cast<double>(total) : 0.0;

    std::size_t fg_tp = 0, fg_pred = 0, fg_gt = 0;
    for (std::size_t i = 0; i < total; ++i) {
        const bool p = pred.labels[i] != 0, g = gt.labels[i] != 0;
        fg_tp += p && g;
        fg_pred += p;
        fg_gt += g;
    }
    const std::size_t fg_union = fg_pred + fg_gt - fg_tp;
    result.foreground_iou = fg_union > 0 ? static_cast<double>(fg_tp) / fg_union : 1.0;
    return result;
}

std::string format_eval(const EvalResult& result, const std::vector<std::string>& label_names) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    for (int k = 0; k < result.num_labels; ++k) {
        out << "class " << k;
        if (k < static_cast<int>(label_names.size())) out << " (" << label_names[k] << ")";
        if (result.per_class_iou[k])
            out << " iou=" << *result.per_class_iou[k] << "\n";
        else
            out << " iou=absent\n";
    }
    out << "mean_iou=" << result.mean_iou << " pixel_accuracy=" << result.pixel_accuracy
        << " foreground_iou=" << result.foreground_iou << "\n";
    return out.str();
}

}  // namespace partseg
