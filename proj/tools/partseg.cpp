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

#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "partseg/crf.hpp"
#include "partseg/eval.hpp"
#include "partseg/grammar.hpp"
#include "partseg/pairwise.hpp"
#include "partseg/pipeline.hpp"
#include "partseg/refiner.hpp"
#include "partseg/synth.hpp"
#include "partseg/tensor.hpp"

namespace {

using namespace partseg;

// deterministic palette: golden-angle hue walk, background black
void write_color_map(const LabelMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "P6\n" << map.width << " " << map.height << "\n255\n";
    auto color = [](std::uint32_t label, unsigned char rgb[3]) {
        if (label == 0) {
            rgb[0] = rgb[1] = rgb[2] = 0;
            return;
        }
        const double h = std::fmod(0.618033988749895 * label, 1.0) * 6.0;
        const int sector = static_cast<int>(h);
        const double f = h - sector;
        const double q = 1.0 - f;
        double r = 0, g = 0, b = 0;
        switch (sector % 6) {
            case 0: r = 1; g = f; b = 0.15; break;
            case 1: r = q; g = 1; b = 0.15; break;
            case 2: r = 0.15; g = 1; b = f; break;
            case 3: r = 0.15; g = q; b = 1; break;
            case 4: r = f; g = 0.15; b = 1; break;
            default: r = 1; g = 0.15; b = q; break;
        }
        rgb[0] = static_cast<unsigned char>(40 + 215 * r);
        rgb[1] = static_cast<unsigned char>(40 + 215 * g);
        rgb[2] = static_cast<unsigned char>(40 + 215 * b);
    };
    for (int r = 0; r < map.height; ++r)
        for (int c = 0; c < map.width; ++c) {
            unsigned char rgb[3];
            color(map.at(r, c), rgb);
            out.write(reinterpret_cast<const char*>(rgb), 3);
        }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

struct InferFlags {
    double lambda_e = kDefaultLambdaE;
    double lambda_p = kDefaultLambdaP;
    double ts = 10.0;
    int max_iters = 5;
    double damping = 0.5;
    double tol = 1e-6;
    std::uint64_t min_area = 0;
    bool oracle = false;
    bool match_meaning = false;
    bool cityblock = false;

    PipelineConfig to_config() const {
        PipelineConfig cfg;
        cfg.lambda_e = lambda_e;
        cfg.lambda_p = lambda_p;
        cfg.grouping_threshold = ts;
        cfg.max_iters = max_iters;
        cfg.damping = damping;
        cfg.tol = tol;
        cfg.min_segment_area = static_cast<std::size_t>(min_area);
        cfg.metric = cityblock ? DistanceMetric::kCityBlock : DistanceMetric::kEuclidean;
        cfg.domain_mode = match_meaning ? DomainMode::kMatchMeaning : DomainMode::kAllConsistent;
        cfg.run_oracle = oracle;
        return cfg;
    }
};

void add_infer_flags(CLI::App* cmd, InferFlags& flags) {
    cmd->add_option("--lambda-e", flags.lambda_e, "pairwise term weight")->capture_default_str();
    cmd->add_option("--lambda-p", flags.lambda_p, "scp unary weight")->capture_default_str();
    cmd->add_option("--ts", flags.ts, "segment grouping distance threshold")->capture_default_str();
    cmd->add_option("--max-iters", flags.max_iters, "message passing iteration cap")
        ->capture_default_str();
    cmd->add_option("--damping", flags.damping, "message damping (weight of the old message)")
        ->capture_default_str();
    cmd->add_option("--tol", flags.tol, "message convergence tolerance")->capture_default_str();
    cmd->add_option("--min-area", flags.min_area, "drop proposed segments smaller than this")
        ->capture_default_str();
    cmd->add_flag("--oracle", flags.oracle, "verify each group against exhaustive search");
    cmd->add_flag("--match-meaning", flags.match_meaning,
                  "restrict node domains to labels sharing the proposed scp's meaning");
    cmd->add_flag("--cityblock", flags.cityblock, "use city-block grouping distance");
}

int run(int argc, char** argv) {
    CLI::App app{"joint object and part segmentation over shared compositional parts"};
    app.require_subcommand(1);

    std::string grammar_path;
    app.add_option("--grammar", grammar_path, "label grammar file")->required();

    // synth -------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic scene from a scene spec");
    std::string synth_spec, synth_out;
    std::uint64_t synth_seed = 0;
    synth->add_option("--spec", synth_spec, "scene spec file")->required();
    synth->add_option("--out-prefix", synth_out, "output path prefix")->required();
    synth->add_option("--seed", synth_seed, "rng seed")->capture_default_str();

    // train ---------------------------------------------------------------
    auto* train = app.add_subcommand("train", "train refiner and pairwise models on random scenes");
    int train_scenes = 24;
    std::uint64_t train_seed = 0;
    int train_height = 48, train_width = 64;
    double train_noise = 0.05;
    int refiner_epochs = 150, pairwise_epochs = 400;
    double refiner_lr = 1e-2, pairwise_lr = 1e-2;
    double dropout = 0.2;
    double train_ts = 10.0;
    std::string refiner_out, model_out, loss_log_out;
    train->add_option("--scenes", train_scenes, "corpus size")->capture_default_str();
    train->add_option("--seed", train_seed, "rng seed")->capture_default_str();
    train->add_option("--height", train_height, "scene height")->capture_default_str();
    train->add_option("--width", train_width, "scene width")->capture_default_str();
    train->add_option("--noise", train_noise, "potential noise strength")->capture_default_str();
    train->add_option("--refiner-epochs", refiner_epochs)->capture_default_str();
    train->add_option("--pairwise-epochs", pairwise_epochs)->capture_default_str();
    train->add_option("--refiner-lr", refiner_lr)->capture_default_str();
    train->add_option("--pairwise-lr", pairwise_lr)->capture_default_str();
    train->add_option("--dropout", dropout, "pairwise hidden dropout rate")->capture_default_str();
    train->add_option("--ts", train_ts, "segment grouping distance threshold")
        ->capture_default_str();
    train->add_option("--refiner-out", refiner_out, "refiner output file")->required();
    train->add_option("--model-out", model_out, "pairwise model output file")->required();
    train->add_option("--loss-log", loss_log_out, "write per-epoch losses to this file");

    // infer ---------------------------------------------------------------
    auto* infer = app.add_subcommand("infer", "run the full pipeline on potential maps");
    std::string in_obj, in_scp, in_refiner, in_model;
    std::string out_object, out_part, out_report, dump_color_prefix;
    InferFlags infer_flags;
    infer->add_option("--obj", in_obj, "object potential map")->required();
    infer->add_option("--scp", in_scp, "scp potential map")->required();
    infer->add_option("--refiner", in_refiner, "refiner file (omit to skip refinement)");
    infer->add_option("--model", in_model, "pairwise model file")->required();
    infer->add_option("--out-object", out_object, "decoded object label map")->required();
    infer->add_option("--out-part", out_part, "decoded part label map")->required();
    infer->add_option("--report", out_report, "write the inference report here");
    infer->add_option("--dump-color", dump_color_prefix,
                      "write <prefix>_object.ppm and <prefix>_part.ppm previews");
    add_infer_flags(infer, infer_flags);

    // eval ----------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "score label maps against ground truth");
    std::vector<std::string> eval_pred, eval_gt;
    std::string eval_space = "object";
    eval->add_option("--pred", eval_pred, "predicted label maps")->required();
    eval->add_option("--gt", eval_gt, "ground-truth label maps")->required();
    eval->add_option("--space", eval_space, "label space: object, scp, or part")
        ->check(CLI::IsMember({"object", "scp", "part"}))
        ->capture_default_str();

    // oracle-check ----------------------------------------------------------
    auto* oracle = app.add_subcommand("oracle-check",
                                      "compare message passing against exhaustive search");
    std::string oc_obj, oc_scp, oc_refiner, oc_model;
    InferFlags oracle_flags;
    oracle->add_option("--obj", oc_obj, "object potential map")->required();
    oracle->add_option("--scp", oc_scp, "scp potential map")->required();
    oracle->add_option("--refiner", oc_refiner, "refiner file (omit to skip refinement)");
    oracle->add_option("--model", oc_model, "pairwise model file")->required();
    add_infer_flags(oracle, oracle_flags);

    CLI11_PARSE(app, argc, argv);

    const LabelGrammar grammar = LabelGrammar::load(grammar_path);

    if (*synth) {
        const SceneSpec spec = SceneSpec::load(synth_spec, grammar);
        const Scene scene = generate_scene(spec, grammar, synth_seed);
        save_potential_map(scene.object_potentials, synth_out + "_obj.pm");
        save_potential_map(scene.scp_potentials, synth_out + "_scp.pm");
        save_label_map(scene.object_gt, synth_out + "_object_gt.lm");
        save_label_map(scene.scp_gt, synth_out + "_scp_gt.lm");
        save_label_map(scene.part_gt, synth_out + "_part_gt.lm");
        std::cout << "scene " << scene.object_gt.height << "x" << scene.object_gt.width
                  << " written to " << synth_out << "_*\n";
        return 0;
    }

    if (*train) {
        std::mt19937_64 rng(train_seed);
        RandomSceneOptions options;
        options.height = train_height;
        options.width = train_width;
        options.noise = train_noise;
        std::vector<Scene> scenes;
        scenes.reserve(train_scenes);
        for (int i = 0; i < train_scenes; ++i)
            scenes.push_back(
                generate_scene(make_random_scene_spec(grammar, rng, options), grammar, rng()));

        TrainPipelineConfig cfg;
        cfg.refiner.learning_rate = refiner_lr;
        cfg.refiner.max_epochs = refiner_epochs;
        cfg.refiner.seed = train_seed;
        cfg.pairwise.learning_rate = pairwise_lr;
        cfg.pairwise.max_epochs = pairwise_epochs;
        cfg.pairwise.seed = train_seed;
        cfg.grouping_threshold = train_ts;
        cfg.dropout_rate = dropout;
        const TrainedModels models = train_pipeline(scenes, grammar, cfg);
        save_refiner(models.refiner, refiner_out);
        save_pairwise_model(models.model, model_out);
        if (!loss_log_out.empty()) {
            std::ofstream log(loss_log_out);
            if (!log) throw std::runtime_error("cannot open '" + loss_log_out + "' for writing");
            log << "refiner";
            for (double v : models.refiner_loss_log) log << " " << v;
            log << "\npairwise";
            for (double v : models.pairwise_loss_log) log << " " << v;
            log << "\n";
        }
        std::cout << "refiner loss " << models.refiner_loss_log.front() << " -> "
                  << models.refiner_loss_log.back() << "\n";
        std::cout << "pairwise loss " << models.pairwise_loss_log.front() << " -> "
                  << models.pairwise_loss_log.back() << "\n";
        std::cout << "wrote " << refiner_out << " and " << model_out << "\n";
        return 0;
    }

    if (*infer) {
        const PotentialMap obj = load_potential_map(in_obj);
        const PotentialMap scp = load_potential_map(in_scp);
        const PairwiseModel model = load_pairwise_model(in_model);
        ConvRefiner refiner;
        if (!in_refiner.empty()) refiner = load_refiner(in_refiner);
        const PipelineResult result = run_pipeline(obj, scp, grammar,
                                                   in_refiner.empty() ? nullptr : &refiner, model,
                                                   infer_flags.to_config());
        save_label_map(result.object_map, out_object);
        save_label_map(result.part_map, out_part);
        if (!out_report.empty()) {
            std::ofstream rep(out_report);
            if (!rep) throw std::runtime_error("cannot open '" + out_report + "' for writing");
            rep << result.report;
        }
        if (!dump_color_prefix.empty()) {
            write_color_map(result.object_map, dump_color_prefix + "_object.ppm");
            write_color_map(result.part_map, dump_color_prefix + "_part.ppm");
        }
        std::cout << result.report;
        return 0;
    }

    if (*eval) {
        if (eval_pred.size() != eval_gt.size())
            throw std::runtime_error("eval: --pred and --gt counts differ");
        int num_labels = grammar.num_objects();
        std::vector<std::string> names = grammar.object_names();
        if (eval_space == "scp") {
            num_labels = grammar.num_scps();
            names = grammar.scp_names();
        } else if (eval_space == "part") {
            num_labels = grammar.num_part_labels();
            names.clear();
            for (int k = 0; k < num_labels; ++k) names.push_back(grammar.part_label_name(k));
        }
        EvalResult pooled;
        LabelMap all_pred, all_gt;
        for (std::size_t i = 0; i < eval_pred.size(); ++i) {
            const LabelMap pred = load_label_map(eval_pred[i]);
            const LabelMap gt = load_label_map(eval_gt[i]);
            const EvalResult r = iou(pred, gt, num_labels);
            std::cout << "image " << eval_pred[i] << "\n" << format_eval(r, names);
            all_pred.labels.insert(all_pred.labels.end(), pred.labels.begin(), pred.labels.end());
            all_gt.labels.insert(all_gt.labels.end(), gt.labels.begin(), gt.labels.end());
        }
        all_pred.height = 1;
        all_pred.width = static_cast<int>(all_pred.labels.size());
        all_gt.height = 1;
        all_gt.width = static_cast<int>(all_gt.labels.size());
        pooled = iou(all_pred, all_gt, num_labels);
        std::cout << "aggregate (" << eval_pred.size() << " images, pooled pixels)\n"
                  << format_eval(pooled, names);
        return 0;
    }

    if (*oracle) {
        const PotentialMap obj = load_potential_map(oc_obj);
        const PotentialMap scp = load_potential_map(oc_scp);
        const PairwiseModel model = load_pairwise_model(oc_model);
        ConvRefiner refiner;
        if (!oc_refiner.empty()) refiner = load_refiner(oc_refiner);
        PipelineConfig cfg = oracle_flags.to_config();
        cfg.run_oracle = true;
        const PipelineResult result = run_pipeline(obj, scp, grammar,
                                                   oc_refiner.empty() ? nullptr : &refiner, model,
                                                   cfg);
        std::cout << result.report;
        bool ok = true;
        for (const GroupReport& g : result.groups)
            if (g.oracle_checked && g.energy > 1.05 * g.oracle_energy + 1e-12) ok = false;
        std::cout << (ok ? "oracle-check: PASS\n" : "oracle-check: FAIL\n");
        return ok ? 0 : 1;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
