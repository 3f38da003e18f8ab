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

#include "partseg/pipeline.hpp"

#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace partseg {

namespace {

[[noreturn]] void stage_fail(const std::string& stage, const std::exception& e) {
    throw std::runtime_error("stage " + stage + ": " + e.what());
}

}  // namespace

PipelineResult run_pipeline(const PotentialMap& object_potentials,
                            const PotentialMap& scp_potentials, const LabelGrammar& grammar,
                            const ConvRefiner* refiner, const PairwiseModel& model,
                            const PipelineConfig& cfg) {
    if (object_potentials.height != scp_potentials.height ||
        object_potentials.width != scp_potentials.width)
        throw std::runtime_error("stage input: object and scp potentials differ in size");
    if (object_potentials.channels != grammar.num_objects() ||
        scp_potentials.channels != grammar.num_scps())
        throw std::runtime_error("stage input: potential channels do not match the grammar");

    PotentialMap refined;
    const PotentialMap* obj = &object_potentials;
    if (refiner) {
        try {
            refined = refine_object_potentials(scp_potentials, object_potentials, *refiner);
        } catch (const std::exception& e) {
            stage_fail("refine", e);
        }
        obj = &refined;
    }

    LabelMap proposal;
    try {
        proposal = argmax_labels(scp_potentials);
    } catch (const std::exception& e) {
        stage_fail("argmax", e);
    }

    std::vector<Segment> segments;
    try {
        segments = connected_components(proposal, cfg.min_segment_area);
    } catch (const std::exception& e) {
        stage_fail("components", e);
    }

    std::vector<SegmentGroup> groups;
    try {
        groups = group_segments(segments, cfg.grouping_threshold, cfg.metric);
    } catch (const std::exception& e) {
        stage_fail("group", e);
    }

    PipelineResult result;
    result.object_map = LabelMap(object_potentials.height, object_potentials.width);
    result.part_map = LabelMap(object_potentials.height, object_potentials.width);

    std::ostringstream report;
    report << std::fixed << std::setprecision(6);
    report << "image " << object_potentials.height << "x" << object_potentials.width
           << " segments=" << segments.size() << " groups=" << groups.size() << "\n";

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const SegmentGroup& group = groups[gi];
        FactorGraph fg;
        try {
            fg = build_fcrf(group, *obj, scp_potentials, model, grammar, cfg.lambda_e,
                            cfg.lambda_p, cfg.domain_mode);
        } catch (const std::exception& e) {
            stage_fail("fcrf", e);
        }
        Labeling labeling;
        try {
            labeling = lbp_map(fg, cfg.max_iters, cfg.damping, cfg.tol);
        } catch (const std::exception& e) {
            stage_fail("lbp", e);
        }

        GroupReport gr;
        gr.nodes = static_cast<int>(group.segments.size());
        gr.iterations = labeling.iterations;
        gr.converged = labeling.converged;
        gr.energy = labeling.total_energy;
        gr.labels = labeling.labels;
        report << "group " << gi << " nodes=" << gr.nodes << " iterations=" << gr.iterations
               << " converged=" << (gr.converged ? "yes" : "no") << " energy=" << gr.energy
               << "\n";
        for (std::size_t i = 0; i < labeling.labels.size(); ++i) {
            const JointLabel& jl = labeling.labels[i];
            report << "  node " << i << " proposed_scp="
                   << grammar.scp_names()[group.segments[i].scp] << " object="
                   << grammar.object_names()[jl.object] << " scp=" << grammar.scp_names()[jl.scp]
                   << " part=" << grammar.recover_part_label(jl.object, jl.scp) << "\n";
        }
        if (cfg.run_oracle) {
            Labeling exact;
            try {
                exact = brute_force_map(fg);
            } catch (const std::exception& e) {
                stage_fail("oracle", e);
            }
            gr.oracle_checked = true;
            gr.oracle_energy = exact.total_energy;
            gr.oracle_labels_match = exact.domain_indices == labeling.domain_indices;
            report << "group " << gi << " oracle energy=" << exact.total_energy
                   << " labels_match=" << (gr.oracle_labels_match ? "yes" : "no") << "\n";
        }
        try {
            decode_into(group, labeling, grammar, result.object_map, result.part_map);
        } catch (const std::exception& e) {
            stage_fail("decode", e);
        }
        result.groups.push_back(std::move(gr));
    }
    result.report = report.str();
    return result;
}

TrainedModels train_pipeline(const std::vector<Scene>& scenes, const LabelGrammar& grammar,
                             const TrainPipelineConfig& cfg) {
    if (scenes.empty()) throw std::runtime_error("stage train: empty scene corpus");

    std::vector<RefinerSample> refiner_samples;
    refiner_samples.reserve(scenes.size());
    for (const Scene& scene : scenes)
        refiner_samples.push_back({scene.scp_potentials, scene.object_potentials, scene.object_gt});

    TrainedModels out;
    try {
        out.refiner = train_refiner(refiner_samples, cfg.refiner, &out.refiner_loss_log);
    } catch (const std::exception& e) {
        stage_fail("train-refiner", e);
    }

    std::vector<Scene> refined(scenes);
    try {
        for (Scene& scene : refined)
            scene.object_potentials = refine_object_potentials(
                scene.scp_potentials, scene.object_potentials, out.refiner);
    } catch (const std::exception& e) {
        stage_fail("refine", e);
    }

    std::vector<PairwiseSample> samples;
    try {
        samples = generate_pairwise_dataset(refined, cfg.grouping_threshold, cfg.metric,
                                            cfg.min_segment_area);
    } catch (const std::exception& e) {
        stage_fail("pairwise-dataset", e);
    }
    if (samples.empty())
        throw std::runtime_error("stage pairwise-dataset: no segment pairs in the corpus");

    try {
        out.model = train_pairwise_model(samples, grammar.num_objects(), grammar.num_scps(),
                                         cfg.pairwise, &out.pairwise_loss_log, cfg.dropout_rate,
                                         cfg.hidden_dim);
    } catch (const std::exception& e) {
        stage_fail("train-pairwise", e);
    }
    return out;
}

}  // namespace partseg
