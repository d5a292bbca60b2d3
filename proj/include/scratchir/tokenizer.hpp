// Copyright 2026 the scratch-ir authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace scratchir {

// fixed special-token ids, stable across all serialized artifacts
constexpr int32_t kPadId = 0;
constexpr int32_t kUnkId = 1;
constexpr int32_t kClsId = 2;
constexpr int32_t kSepId = 3;
constexpr int32_t kMaskId = 4;
constexpr int32_t kNumSpecialTokens = 5;

/// Trained wordpiece vocabulary. Immutable once built; safe for
/// concurrent readers.
class Vocab {
  public:
    static Vocab from_tokens(std::vector<std::string> tokens);
    static Vocab load(const std::string& path);

    // one token per line, line number == id
    void save(const std::string& path) const;
    std::string to_file_string() const;

    int32_t size() const { return static_cast<int32_t>(tokens_.size()); }
    const std::string& token(int32_t id) const;
    const std::vector<std::string>& tokens() const { return tokens_; }
    int32_t id_of(const std::string& token) const;  // -1 when absent

    /// [CLS] + greedy longest-match-first subwords + [SEP], truncated to
    /// max_len with [SEP] kept last. Words with no decomposition become
    /// a single [UNK].
    std::vector<int32_t> encode(const std::string& text, int max_len) const;

    /// Specials dropped, "##" continuations joined, words space-separated.
    std::string decode(const std::vector<int32_t>& ids) const;

  private:
    Vocab() = default;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int32_t> token_to_id_;
};

/// Lowercase, split on whitespace, isolate punctuation. Shared between
/// vocabulary training and encoding.
std::vector<std::string> pretokenize(const std::string& text);

/// Wordpiece training: initial alphabet of word-initial and "##"
/// continuation symbols, then greedy merges scored by
/// freq(pair) / (freq(left) * freq(right)), ties broken lexicographically
/// by the merged string. `seed` is part of the signature for the
/// determinism contract; the procedure itself has no random choices.
Vocab train_wordpiece(const std::vector<std::string>& corpus, int vocab_size, uint64_t seed);

}  // namespace scratchir
