#include "glee/vocab.hpp"

#include <fstream>
#include <sstream>

#include "glee/error.hpp"

namespace glee {

namespace {
const std::vector<std::string> kSpecials = {"[PAD]", "[UNK]", "[CLS]", "[MASK]"};
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
    id_to_token_ = kSpecials;
    for (std::size_t i = 0; i < kSpecials.size(); ++i) {
        token_to_id_[kSpecials[i]] = static_cast<int>(i);
    }
    for (const auto& t : tokens) {
        if (t.empty()) throw ConfigError("vocabulary: empty token");
        if (token_to_id_.count(t)) {
            throw ConfigError("vocabulary: duplicate token '" + t + "'");
        }
        token_to_id_[t] = static_cast<int>(id_to_token_.size());
        id_to_token_.push_back(t);
    }
    if (id_to_token_.size() > kMaxSize) {
        throw ConfigError("vocabulary exceeds " + std::to_string(kMaxSize) + " entries");
    }
}

int Vocabulary::lookup(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
        throw IndexError("vocabulary: id " + std::to_string(id) + " out of range");
    }
    return id_to_token_[static_cast<std::size_t>(id)];
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        tokens.push_back(line);
    }
    return Vocabulary(tokens);
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write vocabulary file: " + path);
    for (std::size_t id = kNumSpecials; id < id_to_token_.size(); ++id) {
        out << id_to_token_[id] << "\n";
    }
}

std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab,
                          std::size_t max_len) {
    if (max_len < 3) throw ConfigError("tokenize: max_len must be >= 3");
    std::vector<int> ids;
    ids.reserve(max_len);
    ids.push_back(Vocabulary::kCls);
    std::istringstream words(text);
    std::string w;
    while (ids.size() < max_len && words >> w) {
        ids.push_back(vocab.lookup(w));
    }
    while (ids.size() < max_len) ids.push_back(Vocabulary::kPad);
    return ids;
}

}  // namespace glee
