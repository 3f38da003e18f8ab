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

#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace partseg {

/// A joint (object, shared-part) label. Valid assignments are restricted to
/// the pairs connected in the grammar.
struct JointLabel {
    int object = 0;
    int scp = 0;

    friend bool operator==(const JointLabel&, const JointLabel&) = default;
    friend auto operator<=>(const JointLabel&, const JointLabel&) = default;
};

/// Label grammar for joint object/part segmentation.
///
/// Objects are composed of shared compositional parts (SCPs). Each SCP carries
/// one semantic meaning (head, leg, ...) and may be shared by several object
/// classes; the set of meaningful (object, scp) combinations is kept as an
/// explicit connection set. Index 0 of every label space is reserved for the
/// background, and (background, background) is the only connection touching it.
///
/// Immutable after load; safe to share across threads.
class LabelGrammar {
public:
    static constexpr const char* kBackgroundName = "background";

    /// Parses and validates a grammar document (see docs/formats.md for the
    /// layout). Throws std::runtime_error naming the offending entry on
    /// duplicate names, unknown labels in connections, or any invariant
    /// violation.
    static LabelGrammar parse(const std::string& text);

    /// Loads a grammar document from a file. Errors as in parse().
    static LabelGrammar load(const std::string& path);

    int num_objects() const { return static_cast<int>(object_names_.size()); }
    int num_scps() const { return static_cast<int>(scp_names_.size()); }
    int num_meanings() const { return static_cast<int>(meaning_names_.size()); }

    const std::vector<std::string>& object_names() const { return object_names_; }
    const std::vector<std::string>& scp_names() const { return scp_names_; }
    const std::vector<std::string>& meaning_names() const { return meaning_names_; }

    /// Semantic meaning index of an SCP.
    int meaning_of(int scp) const;

    /// True iff (object, scp) is a meaningful combination. Throws
    /// std::out_of_range for indices outside the label spaces.
    bool is_consistent(int object, int scp) const;

    /// Composed part-label name for a consistent pair, e.g. "horse-leg".
    /// The reserved background pair maps to "background". Throws
    /// std::invalid_argument on an inconsistent pair.
    std::string recover_part_label(int object, int scp) const;

    /// Index of the recovered part label in the dense object x meaning space:
    /// object * num_meanings() + meaning_of(scp). Background maps to 0.
    int part_label_index(int object, int scp) const;
    int num_part_labels() const { return num_objects() * num_meanings(); }

    /// Name of a part-label index (inverse of part_label_index for used slots).
    std::string part_label_name(int part_index) const;

    /// All connections, including the reserved background pair, ordered by
    /// (object, scp).
    const std::set<std::pair<int, int>>& connections() const { return connections_; }

    /// Connections with a non-background object, ordered by (object, scp).
    /// These are the admissible segment labels.
    std::vector<JointLabel> foreground_pairs() const;

    int object_index(const std::string& name) const;
    int scp_index(const std::string& name) const;
    int meaning_index(const std::string& name) const;

private:
    LabelGrammar() = default;
    void validate() const;

    std::vector<std::string> object_names_;
    std::vector<std::string> scp_names_;
    std::vector<std::string> meaning_names_;
    std::vector<int> scp_meaning_;
    std::set<std::pair<int, int>> connections_;
};

}  // namespace partseg
