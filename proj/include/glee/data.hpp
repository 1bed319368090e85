#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "glee/prompt.hpp"
#include "glee/vocab.hpp"

namespace glee {

enum class Split { Train, Dev, Test };

struct Example {
    std::vector<int> tokens;
    int label = 0;
};

// One split's examples with per-class counts over exactly these examples.
struct Corpus {
    std::vector<Example> examples;
    std::vector<std::size_t> class_counts;
    Split split = Split::Train;
    std::size_t num_classes = 0;

    static Corpus from_examples(std::vector<Example> examples, std::size_t num_classes,
                                Split split);
};

struct Dataset {
    Corpus train, dev, test;
    std::size_t num_classes = 0;
};

struct HeadTailSplit {
    std::set<int> head;
    std::set<int> tail;
    double threshold = 0.0;
};

struct GenerateConfig {
    std::size_t num_classes = 20;
    double exponent = 1.5;
    std::size_t total = 2000;
    std::size_t seq_len = 12;      // content tokens per example (plus leading [CLS])
    double verbalizer_weight = 0.3;  // probability mass on the class's verbalizer tokens
    double topic_weight = 0.4;       // probability mass on the class's topic block
    std::uint64_t seed = 0;
};

// Power-law class sizes (share of class k proportional to (k+1)^-exponent,
// ceil'd so every class gets at least one example), class-specific unigram
// token mixtures that favor the class's verbalizer tokens, and a stratified
// 80/10/10 split with at least one test example per class.
Dataset generate_longtail(const GenerateConfig& cfg, const Vocabulary& vocab,
                          const Verbalizer& verbalizer);

// Classes sorted by descending count (ties by ascending id); head is the
// minimal prefix whose cumulative share reaches the threshold.
HeadTailSplit compute_head_tail(const std::vector<std::size_t>& class_counts,
                                double threshold);

// K train examples drawn uniformly without replacement, plus a disjoint
// K-example dev set drawn from the remaining train examples. Test unchanged.
Dataset sample_fewshot(const Dataset& data, std::size_t k, std::uint64_t seed);

// Applies the template to every example (token ids -> words -> rendered
// text -> token ids); the result carries exactly one [MASK] per example.
Corpus render_corpus(const Corpus& corpus, const Template& tmpl, const Vocabulary& vocab,
                     std::size_t max_len);
Dataset render_dataset(const Dataset& data, const Template& tmpl, const Vocabulary& vocab,
                       std::size_t max_len);

// Text export, one example per line: class<TAB>tok tok tok (specials skipped).
void save_corpus(const Corpus& corpus, const Vocabulary& vocab, const std::string& path);
Corpus load_corpus(const std::string& path, const Vocabulary& vocab, std::size_t max_len,
                   std::size_t num_classes, Split split);

}  // namespace glee
