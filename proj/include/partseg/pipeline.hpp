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

#include <string>
#include <vector>

#include "partseg/crf.hpp"
#include "partseg/grammar.hpp"
#include "partseg/pairwise.hpp"
#include "partseg/refiner.hpp"
#include "partseg/synth.hpp"
#include "partseg/tensor.hpp"

namespace partseg {

struct PipelineConfig {
    double lambda_e = kDefaultLambdaE;
    double lambda_p = kDefaultLambdaP;
    double grouping_threshold = 10.0;
    int max_iters = 5;
    double damping = 0.5;
    double tol = 1e-6;
    std::size_t min_segment_area = 0;
    DistanceMetric metric = DistanceMetric::kEuclidean;
    DomainMode domain_mode = DomainMode::kAllConsistent;
    // compare each group's decoding against the exhaustive optimum
    bool run_oracle = false;
};

struct GroupReport {
    int nodes = 0;
    int iterations = 0;
    bool converged = false;
    double energy = 0.0;
    std::vector<JointLabel> labels;
    bool oracle_checked = false;
    double oracle_energy = 0.0;
    bool oracle_labels_match = false;
};

struct PipelineResult {
    LabelMap object_map;
    LabelMap part_map;
    std::vector<GroupReport> groups;
    std::string report;
};

// refine (optional) -> argmax -> components -> group -> per-group energy
// minimization -> decode.  Any stage failure is rethrown as a runtime_error
// tagged with the stage name.
PipelineResult run_pipeline(const PotentialMap& object_potentials,
                            const PotentialMap& scp_potentials, const LabelGrammar& grammar,
                            const ConvRefiner* refiner, const PairwiseModel& model,
                            const PipelineConfig& cfg = {});

struct TrainPipelineConfig {
    TrainConfig refiner{.learning_rate = 1e-2, .batch_size = 32, .max_epochs = 150, .seed = 0};
    TrainConfig pairwise{.learning_rate = 1e-2, .batch_size = 10000, .max_epochs = 400, .seed = 0};
    double grouping_threshold = 10.0;
    DistanceMetric metric = DistanceMetric::kEuclidean;
    std::size_t min_segment_area = 0;
    double dropout_rate = 0.2;
    int hidden_dim = 32;
};

struct TrainedModels {
    ConvRefiner refiner;
    PairwiseModel model;
    std::vector<double> refiner_loss_log;
    std::vector<double> pairwise_loss_log;
};

// Trains the refiner on the scenes, refines their object potentials, then
// trains the pairwise network on segment pairs proposed from the refined
// scenes.  Divergence (NaN loss) aborts with the stage named.
TrainedModels train_pipeline(const std::vector<Scene>& scenes, const LabelGrammar& grammar,
                             const TrainPipelineConfig& cfg = {});

}  // namespace partseg
