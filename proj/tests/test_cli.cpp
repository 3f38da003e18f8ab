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

// End-to-end tests driving the command-line binary.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "partseg/tensor.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr combined
};

RunResult run_cli(const std::string& args) {
    const std::string command = std::string(PARTSEG_CLI_PATH) + " " + args + " 2>&1";
    RunResult result;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buffer[4096];
    while (std::fgets(buffer, sizeof(buffer), pipe)) result.output += buffer;
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "partseg_cli_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

const char* kGrammar = R"([objects]
horse
cow
[scps]
head_h head
head_c head
body   body
leg    leg
tail   tail
[connections]
horse head_h
horse body
horse leg
horse tail
cow   head_c
cow   body
cow   leg
cow   tail
)";

const char* kScene = R"(size 32 40
noise 0.05
instance horse
offset 4 4
part head_h rect 0 0 6 6
part body   rect 0 7 6 20
part tail   rect 0 21 6 24
end
)";

void write_file(const std::string& path, const char* content) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << content;
}

}  // namespace

TEST_CASE("synth, train, infer, and eval chain through the binary") {
    TempDir dir;
    write_file(dir.file("g.grammar"), kGrammar);
    write_file(dir.file("scene.scene"), kScene);

    const std::string grammar = " --grammar " + dir.file("g.grammar");

    auto synth = run_cli(grammar + " synth --spec " + dir.file("scene.scene") +
                         " --out-prefix " + dir.file("s") + " --seed 3");
    CHECK(synth.exit_code == 0);
    CHECK(fs::exists(dir.file("s_obj.pm")));
    CHECK(fs::exists(dir.file("s_scp.pm")));
    CHECK(fs::exists(dir.file("s_object_gt.lm")));

    auto train = run_cli(grammar + " train --scenes 12 --seed 1 --height 40 --width 48" +
                         " --refiner-epochs 60 --pairwise-epochs 250" +
                         " --refiner-out " + dir.file("r.bin") +
                         " --model-out " + dir.file("m.bin"));
    CHECK(train.exit_code == 0);
    CHECK(fs::exists(dir.file("r.bin")));
    CHECK(fs::exists(dir.file("m.bin")));

    auto infer = run_cli(grammar + " infer --obj " + dir.file("s_obj.pm") +
                         " --scp " + dir.file("s_scp.pm") +
                         " --refiner " + dir.file("r.bin") +
                         " --model " + dir.file("m.bin") +
                         " --out-object " + dir.file("po.lm") +
                         " --out-part " + dir.file("pp.lm") +
                         " --report " + dir.file("report.txt") + " --oracle");
    CHECK(infer.exit_code == 0);
    CHECK(infer.output.find("converged=yes") != std::string::npos);
    CHECK(infer.output.find("labels_match=yes") != std::string::npos);
    CHECK(fs::exists(dir.file("report.txt")));

    auto eval = run_cli(grammar + " eval --pred " + dir.file("po.lm") +
                        " --gt " + dir.file("s_object_gt.lm") + " --space object");
    CHECK(eval.exit_code == 0);
    CHECK(eval.output.find("mean_iou=1.0000") != std::string::npos);

    auto part_eval = run_cli(grammar + " eval --pred " + dir.file("pp.lm") +
                             " --gt " + dir.file("s_part_gt.lm") + " --space part");
    CHECK(part_eval.exit_code == 0);
    CHECK(part_eval.output.find("pixel_accuracy=1.0000") != std::string::npos);

    auto oracle = run_cli(grammar + " oracle-check --obj " + dir.file("s_obj.pm") +
                          " --scp " + dir.file("s_scp.pm") +
                          " --refiner " + dir.file("r.bin") +
                          " --model " + dir.file("m.bin"));
    CHECK(oracle.exit_code == 0);
    CHECK(oracle.output.find("oracle-check: PASS") != std::string::npos);
}

TEST_CASE("failures exit nonzero with a tagged message") {
    TempDir dir;
    write_file(dir.file("g.grammar"), kGrammar);
    const std::string grammar = " --grammar " + dir.file("g.grammar");

    auto missing = run_cli(grammar + " infer --obj /nonexistent.pm --scp /nonexistent.pm" +
                           " --model /nonexistent.bin --out-object " + dir.file("o.lm") +
                           " --out-part " + dir.file("p.lm"));
    CHECK(missing.exit_code != 0);
    CHECK(missing.output.find("error:") != std::string::npos);

    auto bad_grammar = run_cli(" --grammar /nonexistent.grammar synth --spec x --out-prefix y");
    CHECK(bad_grammar.exit_code != 0);

    write_file(dir.file("bad.scene"), "size 8 8\ninstance horse\n");  // unterminated
    auto bad_scene = run_cli(grammar + " synth --spec " + dir.file("bad.scene") +
                             " --out-prefix " + dir.file("x"));
    CHECK(bad_scene.exit_code != 0);
    CHECK(bad_scene.output.find("scene:") != std::string::npos);

    auto no_sub = run_cli(grammar);
    CHECK(no_sub.exit_code != 0);
}

TEST_CASE("identical seeds produce identical artifacts") {
    TempDir dir;
    write_file(dir.file("g.grammar"), kGrammar);
    const std::string grammar = " --grammar " + dir.file("g.grammar");

    for (const char* tag : {"a", "b"}) {
        auto train = run_cli(grammar + " train --scenes 4 --seed 42 --height 40 --width 48" +
                             " --refiner-epochs 10 --pairwise-epochs 20" +
                             " --refiner-out " + dir.file((std::string("r") + tag + ".bin").c_str()) +
                             " --model-out " + dir.file((std::string("m") + tag + ".bin").c_str()));
        REQUIRE(train.exit_code == 0);
    }
    auto bytes = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(bytes(dir.file("ra.bin")) == bytes(dir.file("rb.bin")));
    CHECK(bytes(dir.file("ma.bin")) == bytes(dir.file("mb.bin")));
}
