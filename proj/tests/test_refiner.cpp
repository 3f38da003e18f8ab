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

#include <cmath>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "partseg/refiner.hpp"
#include "partseg/tensor.hpp"

using namespace partseg;

namespace {

ConvRefiner random_refiner(int k, int c_scp, int c_obj, std::mt19937_64& rng) {
    ConvRefiner r(k, c_scp + c_obj, c_obj);
    std::normal_distribution<double> normal(0.0, 0.3);
    for (double& w : r.kernel) w = normal(rng);
    for (double& b : r.bias) b = normal(rng);
    return r;
}

}  // namespace

TEST_CASE("identity refiner reproduces the object argmax") {
    std::mt19937_64 rng(5);
    const PotentialMap scp = fixtures::random_potentials(6, 6, 4, rng);
    const PotentialMap obj = fixtures::random_potentials(6, 6, 3, rng);
    const ConvRefiner id = ConvRefiner::identity(4, 3);
    const PotentialMap out = id.forward(scp, obj);
    CHECK_NOTHROW(out.validate());
    // Softmax of the raw potentials keeps the per-pixel ordering.
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    if (obj.at(r, c, a) < obj.at(r, c, b))
                        CHECK(out.at(r, c, a) < out.at(r, c, b));
}

TEST_CASE("convolution matches the nested-loop reference") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 4; ++trial) {
        const int c_scp = 2 + trial % 3;
        const int c_obj = 2 + trial % 2;
        const PotentialMap scp = fixtures::random_potentials(7, 5, c_scp, rng);
        const PotentialMap obj = fixtures::random_potentials(7, 5, c_obj, rng);
        const ConvRefiner r = random_refiner(5, c_scp, c_obj, rng);
        const std::vector<double> got = r.forward_raw(scp, obj);
        const std::vector<double> want = oracles::naive_conv(scp, obj, r.kernel, r.bias, 5);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }
}

TEST_CASE("loss gradient matches central differences") {
    std::mt19937_64 rng(23);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int c_scp = 2 + trial % 2;
        const int c_obj = 2 + trial % 3;
        const PotentialMap scp = fixtures::random_potentials(4, 4, c_scp, rng);
        const PotentialMap obj = fixtures::random_potentials(4, 4, c_obj, rng);
        LabelMap gt(4, 4);
        std::uniform_int_distribution<int> label(0, c_obj - 1);
        for (auto& v : gt.labels) v = static_cast<std::uint32_t>(label(rng));
        ConvRefiner r = random_refiner(3, c_scp, c_obj, rng);

        const RefinerSample sample{scp, obj, gt};
        const std::vector<RefinerSample> samples{sample};
        std::vector<double> kernel_grad, bias_grad;
        refiner_loss_and_grad(r, samples, &kernel_grad, &bias_grad);

        auto loss = [&] { return refiner_loss_and_grad(r, samples); };
        std::uniform_int_distribution<std::size_t> pick(0, r.kernel.size() - 1);
        for (int probe = 0; probe < 6; ++probe) {
            const std::size_t i = pick(rng);
            const double numeric = oracles::numeric_grad(loss, &r.kernel[i]);
            worst = std::max(worst, oracles::rel_err(kernel_grad[i], numeric));
        }
        for (std::size_t i = 0; i < r.bias.size(); ++i) {
            const double numeric = oracles::numeric_grad(loss, &r.bias[i]);
            worst = std::max(worst, oracles::rel_err(bias_grad[i], numeric));
        }
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("full-batch descent decreases the loss monotonically") {
    std::mt19937_64 rng(31);
    const PotentialMap scp = fixtures::random_potentials(8, 8, 3, rng);
    const PotentialMap obj = fixtures::random_potentials(8, 8, 3, rng);
    LabelMap gt(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) gt.at(r, c) = (r < 4) ? 1u : 2u;

    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.batch_size = 1000;  // clamps to full batch
    cfg.max_epochs = 60;
    std::vector<double> log;
    const std::vector<RefinerSample> samples{{scp, obj, gt}};
    train_refiner(samples, cfg, &log);
    REQUIRE(log.size() == 61u);  // initial loss + one per epoch
    CHECK(log.front() == doctest::Approx(std::log(3.0)).epsilon(1e-9));  // zero init
    for (std::size_t i = 1; i < log.size(); ++i) CHECK(log[i] <= log[i - 1] + 1e-6);
}

TEST_CASE("training memorizes a small scene") {
    std::mt19937_64 rng(37);
    const PotentialMap scp = fixtures::random_potentials(10, 10, 3, rng);
    PotentialMap obj(10, 10, 3);
    LabelMap gt(10, 10);
    // Ground truth follows the potentials so the task is learnable.
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c) {
            const int label = (c < 5) ? 0 : (r < 5 ? 1 : 2);
            gt.at(r, c) = static_cast<std::uint32_t>(label);
            for (int ch = 0; ch < 3; ++ch) obj.at(r, c, ch) = (ch == label) ? 0.8f : 0.1f;
        }

    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.max_epochs = 150;
    const std::vector<RefinerSample> samples{{scp, obj, gt}};
    const ConvRefiner r = train_refiner(samples, cfg);
    const PotentialMap out = r.forward(scp, obj);
    int correct = 0;
    for (int row = 0; row < 10; ++row)
        for (int c = 0; c < 10; ++c) {
            int best = 0;
            for (int ch = 1; ch < 3; ++ch)
                if (out.at(row, c, ch) > out.at(row, c, best)) best = ch;
            correct += best == static_cast<int>(gt.at(row, c));
        }
    CHECK(correct == 100);
}

TEST_CASE("refiner round-trips through disk") {
    std::mt19937_64 rng(41);
    const ConvRefiner r = random_refiner(5, 4, 3, rng);
    const auto path = std::filesystem::temp_directory_path() / "partseg_test_refiner.bin";
    save_refiner(r, path.string());
    const ConvRefiner back = load_refiner(path.string());
    CHECK(back.kernel_size == r.kernel_size);
    CHECK(back.in_channels == r.in_channels);
    CHECK(back.out_channels == r.out_channels);
    REQUIRE(back.kernel.size() == r.kernel.size());
    for (std::size_t i = 0; i < r.kernel.size(); ++i)
        CHECK(back.kernel[i] == doctest::Approx(r.kernel[i]).epsilon(1e-6));  // f32 on disk
    std::filesystem::remove(path);
}

TEST_CASE("shape mismatches are rejected") {
    std::mt19937_64 rng(43);
    const PotentialMap scp = fixtures::random_potentials(4, 4, 3, rng);
    const PotentialMap obj = fixtures::random_potentials(4, 4, 2, rng);
    const PotentialMap obj_big = fixtures::random_potentials(5, 4, 2, rng);
    const ConvRefiner r = ConvRefiner::identity(3, 2);
    CHECK_NOTHROW(r.forward(scp, obj));
    CHECK_THROWS_AS(r.forward(scp, obj_big), std::invalid_argument);
    CHECK_THROWS_AS(r.forward(obj, scp), std::invalid_argument);
    CHECK_THROWS_AS(ConvRefiner(4, 5, 3), std::invalid_argument);  // even kernel
}
