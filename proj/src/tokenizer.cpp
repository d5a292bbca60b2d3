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

#include "scratchir/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "scratchir/common.hpp"
#include "scratchir/io.hpp"

namespace scratchir {

namespace {

const char* kSpecialNames[kNumSpecialTokens] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

constexpr const char* kContinuation = "##";

bool is_ascii_punct(uint32_t cp) {
    return (cp >= 0x21 && cp <= 0x2f) || (cp >= 0x3a && cp <= 0x40) || (cp >= 0x5b && cp <= 0x60) ||
           (cp >= 0x7b && cp <= 0x7e);
}

bool is_unicode_space(uint32_t cp) {
    switch (cp) {
        case ' ': case '\t': case '\n': case '\r': case '\f': case '\v':
        case 0x00a0: case 0x1680: case 0x2028: case 0x2029: case 0x202f:
        case 0x205f: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200a;
    }
}

// decodes one UTF-8 codepoint; malformed bytes are passed through as
// single-byte units so encode() never fails
uint32_t next_codepoint(const std::string& s, size_t& i, size_t& len) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
        len = 1;
        return c;
    }
    int extra = (c >= 0xf0) ? 3 : (c >= 0xe0) ? 2 : (c >= 0xc0) ? 1 : 0;
    if (extra == 0 || i + extra >= s.size()) {
        len = 1;
        return c;
    }
    uint32_t cp = c & (0x3f >> extra);
    for (int k = 1; k <= extra; ++k) {
        unsigned char cc = static_cast<unsigned char>(s[i + static_cast<size_t>(k)]);
        if ((cc & 0xc0) != 0x80) {
            len = 1;
            return c;
        }
        cp = (cp << 6) | (cc & 0x3f);
    }
    len = static_cast<size_t>(extra) + 1;
    return cp;
}

void append_codepoint(std::string& out, const std::string& src, size_t pos, size_t len, uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') {
        out.push_back(static_cast<char>(cp - 'A' + 'a'));
    } else {
        out.append(src, pos, len);
    }
}

// splits a word into its initial wordpiece symbols: first codepoint
// plain, the rest with the "##" continuation prefix
std::vector<std::string> initial_symbols(const std::string& word) {
    std::vector<std::string> syms;
    size_t i = 0;
    while (i < word.size()) {
        size_t len = 0;
        next_codepoint(word, i, len);
        std::string sym = syms.empty() ? "" : kContinuation;
        sym.append(word, i, len);
        syms.push_back(std::move(sym));
        i += len;
    }
    return syms;
}

std::string merge_symbols(const std::string& left, const std::string& right) {
    std::string merged = left;
    if (right.rfind(kContinuation, 0) == 0) {
        merged.append(right, 2, std::string::npos);
    } else {
        merged.append(right);
    }
    return merged;
}

}  // namespace

std::vector<std::string> pretokenize(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    size_t i = 0;
    while (i < text.size()) {
        size_t len = 0;
        uint32_t cp = next_codepoint(text, i, len);
        if (is_unicode_space(cp)) {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
        } else if (is_ascii_punct(cp)) {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
            words.emplace_back(text, i, len);
        } else {
            append_codepoint(current, text, i, len, cp);
        }
        i += len;
    }
    if (!current.empty()) {
        words.push_back(std::move(current));
    }
    return words;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
    Vocab v;
    v.tokens_ = std::move(tokens);
    if (v.tokens_.size() < kNumSpecialTokens) {
        throw_data("vocab must contain at least the five special tokens");
    }
    for (int32_t s = 0; s < kNumSpecialTokens; ++s) {
        if (v.tokens_[static_cast<size_t>(s)] != kSpecialNames[s]) {
            throw_data("vocab ids 0-4 must be [PAD],[UNK],[CLS],[SEP],[MASK] in that order");
        }
    }
    for (size_t id = 0; id < v.tokens_.size(); ++id) {
        if (v.tokens_[id].empty()) {
            throw_data("empty token at id " + std::to_string(id));
        }
        if (!v.token_to_id_.emplace(v.tokens_[id], static_cast<int32_t>(id)).second) {
            throw_data("duplicate token in vocab: " + v.tokens_[id]);
        }
    }
    return v;
}

Vocab Vocab::load(const std::string& path) {
    std::string contents = read_file(path);
    std::vector<std::string> tokens;
    size_t start = 0;
    while (start < contents.size()) {
        size_t end = contents.find('\n', start);
        if (end == std::string::npos) {
            end = contents.size();
        }
        tokens.emplace_back(contents, start, end - start);
        start = end + 1;
    }
    return from_tokens(std::move(tokens));
}

std::string Vocab::to_file_string() const {
    std::string out;
    for (const auto& t : tokens_) {
        out += t;
        out += '\n';
    }
    return out;
}

void Vocab::save(const std::string& path) const { write_file(path, to_file_string()); }

const std::string& Vocab::token(int32_t id) const {
    if (id < 0 || id >= size()) {
        throw_data("token id out of range: " + std::to_string(id));
    }
    return tokens_[static_cast<size_t>(id)];
}

int32_t Vocab::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? -1 : it->second;
}

std::vector<int32_t> Vocab::encode(const std::string& text, int max_len) const {
    if (max_len < 2) {
        throw_data("encode: max_len must be >= 2 to hold [CLS] and [SEP]");
    }
    std::vector<int32_t> ids;
    ids.push_back(kClsId);
    for (const auto& word : pretokenize(text)) {
        // greedy longest-match-first over the word; any unmatched
        // character collapses the whole word to a single [UNK]
        std::vector<int32_t> piece_ids;
        size_t start = 0;
        bool ok = true;
        while (start < word.size()) {
            size_t end = word.size();
            int32_t match = -1;
            while (end > start) {
                std::string candidate = start == 0 ? word.substr(0, end) : kContinuation + word.substr(start, end - start);
                int32_t id = id_of(candidate);
                if (id >= kNumSpecialTokens) {
                    match = id;
                    break;
                }
                // back off one codepoint
                size_t prev = start;
                size_t step = 0;
                while (prev < end) {
                    size_t len = 0;
                    next_codepoint(word, prev, len);
                    if (prev + len >= end) {
                        step = len;
                        break;
                    }
                    prev += len;
                }
                end -= step;
            }
            if (match < 0) {
                ok = false;
                break;
            }
            piece_ids.push_back(match);
            start = end;
        }
        if (ok && !piece_ids.empty()) {
            ids.insert(ids.end(), piece_ids.begin(), piece_ids.end());
        } else if (!word.empty()) {
            ids.push_back(kUnkId);
        }
    }
    if (static_cast<int>(ids.size()) + 1 > max_len) {
        ids.resize(static_cast<size_t>(max_len) - 1);
    }
    ids.push_back(kSepId);
    return ids;
}

std::string Vocab::decode(const std::vector<int32_t>& ids) const {
    std::string out;
    bool in_word = false;
    for (int32_t id : ids) {
        const std::string& tok = token(id);
        if (id < kNumSpecialTokens) {
            continue;
        }
        if (tok.rfind(kContinuation, 0) == 0 && in_word) {
            out.append(tok, 2, std::string::npos);
        } else {
            if (in_word) {
                out.push_back(' ');
            }
            if (tok.rfind(kContinuation, 0) == 0) {
                out.append(tok, 2, std::string::npos);
            } else {
                out.append(tok);
            }
            in_word = true;
        }
    }
    return out;
}

Vocab train_wordpiece(const std::vector<std::string>& corpus, int vocab_size, uint64_t seed) {
    (void)seed;  // no random choices; see header
    std::map<std::string, int64_t> word_freq;
    for (const auto& doc : corpus) {
        for (auto& w : pretokenize(doc)) {
            ++word_freq[w];
        }
    }
    if (word_freq.empty()) {
        throw_data("EmptyCorpus: no words after pre-tokenization");
    }

    // word -> current symbol sequence
    std::vector<std::pair<std::vector<std::string>, int64_t>> segs;
    segs.reserve(word_freq.size());
    std::set<std::string> alphabet;
    for (const auto& [word, freq] : word_freq) {
        auto syms = initial_symbols(word);
        for (const auto& s : syms) {
            alphabet.insert(s);
        }
        segs.emplace_back(std::move(syms), freq);
    }

    int min_size = kNumSpecialTokens + static_cast<int>(alphabet.size());
    if (vocab_size < min_size) {
        throw_data("VocabSizeTooSmall: need at least " + std::to_string(min_size) +
                   " entries (specials + character inventory), got " + std::to_string(vocab_size));
    }

    std::vector<std::string> tokens;
    tokens.reserve(static_cast<size_t>(vocab_size));
    for (const char* s : kSpecialNames) {
        tokens.emplace_back(s);
    }
    tokens.insert(tokens.end(), alphabet.begin(), alphabet.end());

    while (static_cast<int>(tokens.size()) < vocab_size) {
        std::map<std::pair<std::string, std::string>, int64_t> pair_freq;
        std::map<std::string, int64_t> sym_freq;
        for (const auto& [syms, freq] : segs) {
            for (const auto& s : syms) {
                sym_freq[s] += freq;
            }
            for (size_t i = 0; i + 1 < syms.size(); ++i) {
                pair_freq[{syms[i], syms[i + 1]}] += freq;
            }
        }
        if (pair_freq.empty()) {
            break;
        }
        // highest score; ties by lexicographically smallest merged string
        double best_score = -1.0;
        std::pair<std::string, std::string> best_pair;
        std::string best_merged;
        for (const auto& [pair, freq] : pair_freq) {
            double score = static_cast<double>(freq) /
                           (static_cast<double>(sym_freq[pair.first]) * static_cast<double>(sym_freq[pair.second]));
            std::string merged = merge_symbols(pair.first, pair.second);
            if (score > best_score || (score == best_score && merged < best_merged)) {
                best_score = score;
                best_pair = pair;
                best_merged = merged;
            }
        }
        tokens.push_back(best_merged);
        for (auto& [syms, freq] : segs) {
            std::vector<std::string> out;
            out.reserve(syms.size());
            size_t i = 0;
            while (i < syms.size()) {
                if (i + 1 < syms.size() && syms[i] == best_pair.first && syms[i + 1] == best_pair.second) {
                    out.push_back(best_merged);
                    i += 2;
                } else {
                    out.push_back(std::move(syms[i]));
                    ++i;
                }
            }
            syms = std::move(out);
        }
    }

    // tiny corpora can exhaust merges; pad to the exact requested size
    int unused = 0;
    while (static_cast<int>(tokens.size()) < vocab_size) {
        tokens.push_back("[unused" + std::to_string(unused++) + "]");
    }
    return Vocab::from_tokens(std::move(tokens));
}

}  // namespace scratchir
