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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "fixtures.hpp"
#include "partseg/tensor.hpp"

using namespace partseg;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("potential map indexing is row, column, channel") {
    PotentialMap map(2, 3, 4);
    CHECK(map.values.size() == 24);
    CHECK(map.index(0, 0, 0) == 0);
    CHECK(map.index(0, 0, 3) == 3);
    CHECK(map.index(0, 1, 0) == 4);
    CHECK(map.index(1, 0, 0) == 12);
    map.at(1, 2, 3) = 0.5f;
    CHECK(map.values[23] == 0.5f);
}

TEST_CASE("validate accepts distributions and rejects everything else") {
    PotentialMap map(1, 1, 2);
    map.at(0, 0, 0) = 0.25f;
    map.at(0, 0, 1) = 0.75f;
    CHECK_NOTHROW(map.validate());

    map.at(0, 0, 1) = 0.80f;  // sums to 1.05
    CHECK_THROWS_AS(map.validate(), std::runtime_error);

    map.at(0, 0, 0) = -0.05f;
    map.at(0, 0, 1) = 1.05f;
    CHECK_THROWS_AS(map.validate(), std::runtime_error);

    map.at(0, 0, 0) = std::numeric_limits<float>::quiet_NaN();
    map.at(0, 0, 1) = 1.0f;
    CHECK_THROWS_AS(map.validate(), std::runtime_error);
}

TEST_CASE("normalize divides by the per-pixel sum") {
    PotentialMap map(1, 2, 2);
    map.at(0, 0, 0) = 2.0f;
    map.at(0, 0, 1) = 6.0f;
    map.at(0, 1, 0) = 5.0f;
    map.at(0, 1, 1) = 5.0f;
    const PotentialMap out = normalize(map);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.25));
    CHECK(out.at(0, 0, 1) == doctest::Approx(0.75));
    CHECK(out.at(0, 1, 0) == doctest::Approx(0.5));
    CHECK_NOTHROW(out.validate());

    PotentialMap zero(1, 1, 2);
    CHECK_THROWS_AS(normalize(zero), std::runtime_error);

    PotentialMap negative(1, 1, 2);
    negative.at(0, 0, 0) = -1.0f;
    negative.at(0, 0, 1) = 3.0f;
    CHECK_THROWS_AS(normalize(negative), std::runtime_error);
}

TEST_CASE("potential map round-trips through disk") {
    std::mt19937_64 rng(11);
    const PotentialMap map = fixtures::random_potentials(5, 7, 3, rng);
    const auto path = temp_file("partseg_test_tensor.pm");
    save_potential_map(map, path.string());
    const PotentialMap back = load_potential_map(path.string());
    CHECK(back.height == map.height);
    CHECK(back.width == map.width);
    CHECK(back.channels == map.channels);
    CHECK(back.values == map.values);  // float32 on disk, bitwise identical
    std::filesystem::remove(path);
}

TEST_CASE("label map round-trips through disk") {
    LabelMap map(3, 4);
    map.at(0, 0) = 7;
    map.at(2, 3) = 42;
    const auto path = temp_file("partseg_test_labels.lm");
    save_label_map(map, path.string());
    const LabelMap back = load_label_map(path.string());
    CHECK(back == map);
    std::filesystem::remove(path);
}

TEST_CASE("loaders reject wrong magic and truncation") {
    const auto pm_path = temp_file("partseg_test_bad.pm");
    const auto lm_path = temp_file("partseg_test_bad.lm");

    LabelMap labels(2, 2);
    save_label_map(labels, lm_path.string());
    // A label-map file is not a potential map.
    CHECK_THROWS_WITH_AS(load_potential_map(lm_path.string()),
                         doctest::Contains("bad magic"), std::runtime_error);

    std::mt19937_64 rng(3);
    save_potential_map(fixtures::random_potentials(2, 2, 2, rng), pm_path.string());
    CHECK_THROWS_WITH_AS(load_label_map(pm_path.string()),
                         doctest::Contains("bad magic"), std::runtime_error);

    // Truncate the payload.
    std::filesystem::resize_file(pm_path, 30);
    CHECK_THROWS_WITH_AS(load_potential_map(pm_path.string()),
                         doctest::Contains("truncated"), std::runtime_error);

    CHECK_THROWS_AS(load_potential_map("/nonexistent/nowhere.pm"), std::runtime_error);

    std::filesystem::remove(pm_path);
    std::filesystem::remove(lm_path);
}

TEST_CASE("saving an invalid potential map is refused") {
    PotentialMap map(1, 1, 2);
    map.at(0, 0, 0) = 0.9f;
    map.at(0, 0, 1) = 0.9f;
    CHECK_THROWS_AS(save_potential_map(map, temp_file("partseg_never.pm").string()),
                    std::runtime_error);
}
