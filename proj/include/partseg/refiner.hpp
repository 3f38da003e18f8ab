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
#include <span>
#include <string>
#include <vector>

#include "partseg/grammar.hpp"
#include "partseg/tensor.hpp"

namespace partseg {

/// Shared gradient-descent settings.
struct TrainConfig {
    double learning_rate = 1e-2;
    int batch_size = 32;
    int max_epochs = 200;
    std::uint64_t seed = 0;
};

/// Learning rate used for the joint layer when training at full dataset scale;
/// at the scale of this repository the TrainConfig default converges faster.
constexpr double kFullScaleRefinerLearningRate = 1e-4;

/// Convolution layer that refines object potentials from the channel
/// concatenation of SCP and object potentials (SCP channels first). Zero
/// padded, stride 1, per-pixel softmax on the output.
struct ConvRefiner {
    int kernel_size = 5;
    int in_channels = 0;   // scp channels + object channels
    int out_channels = 0;  // object channels
    std::vector<double> kernel;  // [ky][kx][c_in][c_out]
    std::vector<double> bias;    // [c_out]

    ConvRefiner() = default;
    ConvRefiner(int k, int c_in, int c_out);

    std::size_t kernel_index(int ky, int kx, int ci, int co) const {
        return ((static_cast<std::size_t>(ky) * kernel_size + kx) * in_channels + ci) * out_channels + co;
    }

    /// Refiner whose center tap copies the object channels (zero bias);
    /// its output is the per-pixel softmax of the object probabilities.
    static ConvRefiner identity(int scp_channels, int obj_channels, int k = 5);

    /// Pre-softmax activations, H*W*out_channels with channel fastest.
    /// Throws std::invalid_argument on shape mismatch.
    std::vector<double> forward_raw(const PotentialMap& scp, const PotentialMap& obj) const;

    /// Refined object potentials: per-pixel softmax of forward_raw.
    PotentialMap forward(const PotentialMap& scp, const PotentialMap& obj) const;
};

PotentialMap refine_object_potentials(const PotentialMap& scp, const PotentialMap& obj,
                                      const ConvRefiner& refiner);

void save_refiner(const ConvRefiner& r, const std::string& path);
ConvRefiner load_refiner(const std::string& path);

struct RefinerSample {
    PotentialMap scp;
    PotentialMap obj;
    LabelMap gt_object;
};

/// Mean per-pixel multinomial logistic loss of the refiner on the samples;
/// when grads are given they receive d(loss)/d(kernel) and d(loss)/d(bias).
double refiner_loss_and_grad(const ConvRefiner& r, std::span<const RefinerSample> samples,
                             std::vector<double>* kernel_grad = nullptr,
                             std::vector<double>* bias_grad = nullptr);

/// Gradient descent on the multinomial logistic loss, zero-initialized
/// weights. Full batch when batch_size >= sample count, otherwise shuffled
/// mini-batches. loss_log, when given, receives the full-set loss before
/// training and after every epoch. Throws std::runtime_error on an empty
/// sample set, out-of-range labels, or a NaN loss.
ConvRefiner train_refiner(const std::vector<RefinerSample>& samples, const TrainConfig& cfg,
                          std::vector<double>* loss_log = nullptr);

}  // namespace partseg
