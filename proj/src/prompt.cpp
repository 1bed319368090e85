#include "glee/prompt.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "glee/error.hpp"

namespace glee {

namespace {

std::size_t count_occurrences(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    std::size_t pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Template::Template(std::string p) : pattern(std::move(p)) {
    if (count_occurrences(pattern, "{x}") != 1) {
        throw TemplateError("template must contain exactly one {x}: '" + pattern + "'");
    }
    if (count_occurrences(pattern, "[MASK]") != 1) {
        throw TemplateError("template must contain exactly one [MASK]: '" + pattern + "'");
    }
}

std::string Template::render(const std::string& x) const {
    std::string out = pattern;
    out.replace(out.find("{x}"), 3, x);
    return out;
}

std::string render_template(const Template& t, const std::string& x) {
    return t.render(x);
}

Verbalizer::Verbalizer(std::map<int, std::vector<int>> classes, std::size_t vocab_size)
    : classes_(std::move(classes)) {
    if (classes_.empty()) throw VerbalizerError("verbalizer has no classes");
    std::set<int> seen;
    int expected = 0;
    for (const auto& [cls, toks] : classes_) {
        if (cls != expected) {
            throw VerbalizerError("verbalizer classes must cover 0..C-1, missing class " +
                                  std::to_string(expected));
        }
        ++expected;
        if (toks.empty()) {
            throw VerbalizerError("class " + std::to_string(cls) + " has an empty token set");
        }
        for (int t : toks) {
            if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
                throw VerbalizerError("class " + std::to_string(cls) + " token id " +
                                      std::to_string(t) + " outside vocabulary");
            }
            if (t < static_cast<int>(Vocabulary::kNumSpecials)) {
                throw VerbalizerError("class " + std::to_string(cls) +
                                      " maps to a special token");
            }
            if (!seen.insert(t).second) {
                throw VerbalizerError("token id " + std::to_string(t) +
                                      " appears in more than one class entry");
            }
        }
    }
}

const std::vector<int>& Verbalizer::tokens(int class_id) const {
    auto it = classes_.find(class_id);
    if (it == classes_.end()) {
        throw VerbalizerError("verbalizer has no class " + std::to_string(class_id));
    }
    return it->second;
}

PromptSpec load_prompt_file(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open prompt file: " + path);

    std::string pattern;
    bool have_template = false;
    std::map<int, std::vector<int>> classes;

    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("template:", 0) == 0) {
            pattern = trim(line.substr(9));
            have_template = true;
        } else if (line.rfind("class ", 0) == 0) {
            std::size_t colon = line.find(':');
            if (colon == std::string::npos) {
                throw FormatError(path + ": malformed class line '" + line + "'");
            }
            int cls = std::stoi(line.substr(6, colon - 6));
            std::vector<int> toks;
            std::istringstream rest(line.substr(colon + 1));
            std::string word;
            while (std::getline(rest, word, ',')) {
                word = trim(word);
                if (word.empty()) continue;
                int id = vocab.lookup(word);
                if (id == Vocabulary::kUnk && word != "[UNK]") {
                    throw VerbalizerError(path + ": token '" + word +
                                          "' not in vocabulary (class " +
                                          std::to_string(cls) + ")");
                }
                toks.push_back(id);
            }
            classes[cls] = std::move(toks);
        } else {
            throw FormatError(path + ": unrecognized line '" + line + "'");
        }
    }
    if (!have_template) throw FormatError(path + ": missing 'template:' line");
    return PromptSpec{Template(pattern), Verbalizer(std::move(classes), vocab.size())};
}

void save_prompt_file(const std::string& path, const Template& tmpl,
                      const Verbalizer& verbalizer, const Vocabulary& vocab) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write prompt file: " + path);
    out << "template: " << tmpl.pattern << "\n";
    for (const auto& [cls, toks] : verbalizer.classes()) {
        out << "class " << cls << ":";
        for (std::size_t i = 0; i < toks.size(); ++i) {
            out << (i == 0 ? " " : ", ") << vocab.token(toks[i]);
        }
        out << "\n";
    }
}

}  // namespace glee
