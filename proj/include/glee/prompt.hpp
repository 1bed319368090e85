#pragma once

#include <map>
#include <string>
#include <vector>

#include "glee/vocab.hpp"

namespace glee {

// Input pattern with exactly one "{x}" slot and exactly one "[MASK]".
struct Template {
    std::string pattern;

    explicit Template(std::string p);
    std::string render(const std::string& x) const;
};

std::string render_template(const Template& t, const std::string& x);

// Class id -> nonempty set of non-special token ids. Token sets are disjoint:
// a shared token would make class scores non-identifiable and would leave the
// per-class norm calibration of tied predictor rows ill-defined.
class Verbalizer {
public:
    Verbalizer() = default;
    Verbalizer(std::map<int, std::vector<int>> classes, std::size_t vocab_size);

    std::size_t num_classes() const { return classes_.size(); }
    const std::vector<int>& tokens(int class_id) const;
    const std::map<int, std::vector<int>>& classes() const { return classes_; }

private:
    std::map<int, std::vector<int>> classes_;
};

struct PromptSpec {
    Template tmpl;
    Verbalizer verbalizer;
};

// Line-oriented config:
//   template: <pattern>
//   class <id>: tok1, tok2, ...
// Token words are resolved through the vocabulary; unknown words are a
// verbalizer error.
PromptSpec load_prompt_file(const std::string& path, const Vocabulary& vocab);
void save_prompt_file(const std::string& path, const Template& tmpl,
                      const Verbalizer& verbalizer, const Vocabulary& vocab);

}  // namespace glee
