#pragma once

#include <map>
#include <string>
#include <vector>

namespace glee {

// Token string <-> id map with four reserved specials. Non-special ids
// start at 4. Capped at 4096 entries.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;
    static constexpr int kMask = 3;
    static constexpr std::size_t kNumSpecials = 4;
    static constexpr std::size_t kMaxSize = 4096;

    Vocabulary();
    // `tokens` are the non-special entries, assigned ids 4, 5, ...
    explicit Vocabulary(const std::vector<std::string>& tokens);

    std::size_t size() const { return id_to_token_.size(); }

    // kUnk for words not in the map.
    int lookup(const std::string& token) const;
    const std::string& token(int id) const;
    bool is_special(int id) const { return id >= 0 && id < static_cast<int>(kNumSpecials); }

    // One non-special token per line, line number = id - 4.
    static Vocabulary load(const std::string& path);
    void save(const std::string& path) const;

private:
    std::vector<std::string> id_to_token_;
    std::map<std::string, int> token_to_id_;
};

// Whitespace tokenizer: [CLS] prepended, unknown words map to [UNK],
// result truncated or [PAD]-padded to exactly max_len ids.
std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab,
                          std::size_t max_len);

}  // namespace glee
