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

#include "partseg/grammar.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace partseg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_tokens(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

[[noreturn]] void fail(const std::string& what) {
    throw std::runtime_error("grammar: " + what);
}

}  // namespace

LabelGrammar LabelGrammar::parse(const std::string& text) {
    LabelGrammar g;
    g.object_names_ = {kBackgroundName};
    g.scp_names_ = {kBackgroundName};
    g.meaning_names_ = {kBackgroundName};
    g.scp_meaning_ = {0};
    g.connections_.insert({0, 0});

    std::map<std::string, int> object_index;
    std::map<std::string, int> scp_index;
    std::map<std::string, int> meaning_index;
    object_index[kBackgroundName] = 0;
    scp_index[kBackgroundName] = 0;
    meaning_index[kBackgroundName] = 0;

    enum class Section { None, Objects, Scps, Connections };
    Section section = Section::None;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail("malformed section header at line " + std::to_string(line_no));
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name == "objects") section = Section::Objects;
            else if (name == "scps") section = Section::Scps;
            else if (name == "connections") section = Section::Connections;
            else fail("unknown section [" + name + "]");
            continue;
        }

        const auto tokens = split_tokens(line);
        switch (section) {
        case Section::None:
            fail("entry before any section at line " + std::to_string(line_no));
        case Section::Objects: {
            if (tokens.size() != 1) fail("object entry must be a single name: '" + line + "'");
            const std::string& name = tokens[0];
            if (object_index.count(name)) fail("duplicate object name '" + name + "'");
            object_index[name] = static_cast<int>(g.object_names_.size());
            g.object_names_.push_back(name);
            break;
        }
        case Section::Scps: {
            if (tokens.size() != 2) fail("scp entry must be 'name meaning': '" + line + "'");
            const std::string& name = tokens[0];
            const std::string& meaning = tokens[1];
            if (scp_index.count(name)) fail("duplicate scp name '" + name + "'");
            if (meaning == kBackgroundName) fail("meaning name '" + meaning + "' is reserved");
            auto [it, inserted] = meaning_index.try_emplace(meaning, static_cast<int>(g.meaning_names_.size()));
            if (inserted) g.meaning_names_.push_back(meaning);
            scp_index[name] = static_cast<int>(g.scp_names_.size());
            g.scp_names_.push_back(name);
            g.scp_meaning_.push_back(it->second);
            break;
        }
        case Section::Connections: {
            if (tokens.size() != 2) fail("connection entry must be 'object scp': '" + line + "'");
            auto oit = object_index.find(tokens[0]);
            if (oit == object_index.end()) fail("connection references unknown object '" + tokens[0] + "'");
            auto sit = scp_index.find(tokens[1]);
            if (sit == scp_index.end()) fail("connection references unknown scp '" + tokens[1] + "'");
            if (oit->second == 0 || sit->second == 0)
                fail("connection may not reference the background: '" + line + "'");
            if (!g.connections_.insert({oit->second, sit->second}).second)
                fail("duplicate connection '" + line + "'");
            break;
        }
        }
    }

    g.validate();
    return g;
}

LabelGrammar LabelGrammar::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void LabelGrammar::validate() const {
    std::vector<int> object_degree(object_names_.size(), 0);
    std::vector<int> scp_degree(scp_names_.size(), 0);
    // meanings used per object, to enforce one SCP per meaning per object
    std::map<std::pair<int, int>, int> meaning_user;  // (object, meaning) -> scp

    for (const auto& [o, s] : connections_) {
        ++object_degree[o];
        ++scp_degree[s];
        if (o == 0 || s == 0) {
            if (!(o == 0 && s == 0))
                fail("background may only connect to background");
            continue;
        }
        const int m = scp_meaning_[s];
        auto [it, inserted] = meaning_user.try_emplace({o, m}, s);
        if (!inserted)
            fail("object '" + object_names_[o] + "' connects two SCPs of meaning '" +
                 meaning_names_[m] + "': '" + scp_names_[it->second] + "' and '" + scp_names_[s] + "'");
    }
    for (std::size_t o = 1; o < object_names_.size(); ++o)
        if (object_degree[o] == 0)
            fail("object '" + object_names_[o] + "' has no connections");
    for (std::size_t s = 1; s < scp_names_.size(); ++s)
        if (scp_degree[s] == 0)
            fail("scp '" + scp_names_[s] + "' has no connections");
}

int LabelGrammar::meaning_of(int scp) const {
    if (scp < 0 || scp >= num_scps()) throw std::out_of_range("grammar: scp index out of range");
    return scp_meaning_[scp];
}

bool LabelGrammar::is_consistent(int object, int scp) const {
    if (object < 0 || object >= num_objects()) throw std::out_of_range("grammar: object index out of range");
    if (scp < 0 || scp >= num_scps()) throw std::out_of_range("grammar: scp index out of range");
    return connections_.count({object, scp}) > 0;
}

std::string LabelGrammar::recover_part_label(int object, int scp) const {
    if (!is_consistent(object, scp))
        throw std::invalid_argument("grammar: (" + object_names_.at(object) + ", " +
                                    scp_names_.at(scp) + ") is not a meaningful combination");
    if (object == 0) return kBackgroundName;
    return object_names_[object] + "-" + meaning_names_[scp_meaning_[scp]];
}

int LabelGrammar::part_label_index(int object, int scp) const {
    if (!is_consistent(object, scp))
        throw std::invalid_argument("grammar: inconsistent pair has no part label");
    return object * num_meanings() + scp_meaning_[scp];
}

std::string LabelGrammar::part_label_name(int part_index) const {
    if (part_index < 0 || part_index >= num_part_labels())
        throw std::out_of_range("grammar: part label index out of range");
    const int object = part_index / num_meanings();
    const int meaning = part_index % num_meanings();
    if (object == 0 && meaning == 0) return kBackgroundName;
    return object_names_[object] + "-" + meaning_names_[meaning];
}

std::vector<JointLabel> LabelGrammar::foreground_pairs() const {
    std::vector<JointLabel> pairs;
    for (const auto& [o, s] : connections_)
        if (o != 0) pairs.push_back({o, s});
    return pairs;
}

int LabelGrammar::object_index(const std::string& name) const {
    const auto it = std::find(object_names_.begin(), object_names_.end(), name);
    if (it == object_names_.end()) throw std::invalid_argument("grammar: unknown object '" + name + "'");
    return static_cast<int>(it - object_names_.begin());
}

int LabelGrammar::scp_index(const std::string& name) const {
    const auto it = std::find(scp_names_.begin(), scp_names_.end(), name);
    if (it == scp_names_.end()) throw std::invalid_argument("grammar: unknown scp '" + name + "'");
    return static_cast<int>(it - scp_names_.begin());
}

int LabelGrammar::meaning_index(const std::string& name) const {
    const auto it = std::find(meaning_names_.begin(), meaning_names_.end(), name);
    if (it == meaning_names_.end()) throw std::invalid_argument("grammar: unknown meaning '" + name + "'");
    return static_cast<int>(it - meaning_names_.begin());
}

}  // namespace partseg
