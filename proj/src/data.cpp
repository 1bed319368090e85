#include "glee/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "glee/error.hpp"
#include "glee/rng.hpp"

namespace glee {

Corpus Corpus::from_examples(std::vector<Example> examples, std::size_t num_classes,
                             Split split) {
    Corpus c;
    c.examples = std::move(examples);
    c.num_classes = num_classes;
    c.split = split;
    c.class_counts.assign(num_classes, 0);
    for (const auto& ex : c.examples) {
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= num_classes) {
            throw IndexError("corpus: label " + std::to_string(ex.label) +
                             " outside [0, " + std::to_string(num_classes) + ")");
        }
        ++c.class_counts[static_cast<std::size_t>(ex.label)];
    }
    return c;
}

namespace {

// Per-class token sampler: verbalizer tokens, then a contiguous "topic"
// block of the vocabulary, then uniform background. The topic block gives
// classes a learnable signature beyond their verbalizer tokens.
int sample_token(int cls, const GenerateConfig& cfg, const Verbalizer& verbalizer,
                 std::size_t vocab_size, Rng& rng) {
    const std::size_t content = vocab_size - Vocabulary::kNumSpecials;
    double u = uniform01(rng);
    if (u < cfg.verbalizer_weight) {
        const auto& toks = verbalizer.tokens(cls);
        return toks[static_cast<std::size_t>(uniform_below(rng, toks.size()))];
    }
    if (u < cfg.verbalizer_weight + cfg.topic_weight) {
        // Block of 8 ids anchored at the class, wrapped over the content range.
        std::size_t block = 8;
        std::size_t start = (static_cast<std::size_t>(cls) * block) % content;
        std::size_t off = static_cast<std::size_t>(uniform_below(rng, block));
        return static_cast<int>(Vocabulary::kNumSpecials + (start + off) % content);
    }
    return static_cast<int>(Vocabulary::kNumSpecials + uniform_below(rng, content));
}

}  // namespace

Dataset generate_longtail(const GenerateConfig& cfg, const Vocabulary& vocab,
                          const Verbalizer& verbalizer) {
    if (cfg.num_classes < 2) throw ConfigError("generate_longtail: need at least 2 classes");
    if (cfg.exponent < 0.0) throw ConfigError("generate_longtail: exponent must be >= 0");
    if (cfg.total < cfg.num_classes) {
        throw ConfigError("generate_longtail: total " + std::to_string(cfg.total) +
                          " < classes " + std::to_string(cfg.num_classes));
    }
    if (verbalizer.num_classes() != cfg.num_classes) {
        throw ConfigError("generate_longtail: verbalizer covers " +
                          std::to_string(verbalizer.num_classes()) + " classes, config says " +
                          std::to_string(cfg.num_classes));
    }

    std::vector<double> shares(cfg.num_classes);
    double sum = 0.0;
    for (std::size_t k = 0; k < cfg.num_classes; ++k) {
        shares[k] = std::pow(static_cast<double>(k + 1), -cfg.exponent);
        sum += shares[k];
    }
    std::vector<std::size_t> counts(cfg.num_classes);
    for (std::size_t k = 0; k < cfg.num_classes; ++k) {
        counts[k] = static_cast<std::size_t>(
            std::ceil(static_cast<double>(cfg.total) * shares[k] / sum));
    }

    Rng rng(mix_seed(cfg.seed, 0x6c74));  // corpus stream
    std::vector<Example> train, dev, test;
    for (std::size_t k = 0; k < cfg.num_classes; ++k) {
        std::vector<Example> members(counts[k]);
        for (auto& ex : members) {
            ex.label = static_cast<int>(k);
            ex.tokens.reserve(cfg.seq_len + 1);
            ex.tokens.push_back(Vocabulary::kCls);
            for (std::size_t j = 0; j < cfg.seq_len; ++j) {
                ex.tokens.push_back(sample_token(static_cast<int>(k), cfg, verbalizer,
                                                 vocab.size(), rng));
            }
        }
        shuffle(members, rng);

        // Stratified 80/10/10 with the test slot guaranteed first.
        std::size_t n = members.size();
        std::size_t n_test = std::max<std::size_t>(1, n / 10);
        std::size_t n_dev = (n > n_test + 1) ? std::max<std::size_t>(1, n / 10) : 0;
        if (n_test + n_dev > n) n_dev = n - n_test;
        std::size_t i = 0;
        for (; i < n_test; ++i) test.push_back(members[i]);
        for (; i < n_test + n_dev; ++i) dev.push_back(members[i]);
        for (; i < n; ++i) train.push_back(members[i]);
    }

    Dataset data;
    data.num_classes = cfg.num_classes;
    data.train = Corpus::from_examples(std::move(train), cfg.num_classes, Split::Train);
    data.dev = Corpus::from_examples(std::move(dev), cfg.num_classes, Split::Dev);
    data.test = Corpus::from_examples(std::move(test), cfg.num_classes, Split::Test);
    return data;
}

HeadTailSplit compute_head_tail(const std::vector<std::size_t>& class_counts,
                                double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0) {
        throw ConfigError("compute_head_tail: threshold must be in (0, 1)");
    }
    std::size_t total = std::accumulate(class_counts.begin(), class_counts.end(),
                                        static_cast<std::size_t>(0));
    if (total == 0) throw Error("compute_head_tail: all class counts are zero");

    std::vector<std::size_t> order(class_counts.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (class_counts[a] != class_counts[b]) return class_counts[a] > class_counts[b];
        return a < b;
    });

    HeadTailSplit split;
    split.threshold = threshold;
    std::size_t cum = 0;
    bool reached = false;
    for (std::size_t idx : order) {
        if (!reached) {
            cum += class_counts[idx];
            split.head.insert(static_cast<int>(idx));
            if (static_cast<double>(cum) >= threshold * static_cast<double>(total)) {
                reached = true;
            }
        } else {
            split.tail.insert(static_cast<int>(idx));
        }
    }
    return split;
}

Dataset sample_fewshot(const Dataset& data, std::size_t k, std::uint64_t seed) {
    const std::size_t n = data.train.examples.size();
    if (2 * k > n) {
        throw ConfigError("sample_fewshot: need 2*K <= train size (K=" + std::to_string(k) +
                          ", train=" + std::to_string(n) + ")");
    }
    Rng rng(mix_seed(seed, 0x6673));  // few-shot stream
    auto picked = sample_without_replacement(n, 2 * k, rng);

    std::vector<Example> train, dev;
    for (std::size_t i = 0; i < k; ++i) train.push_back(data.train.examples[picked[i]]);
    for (std::size_t i = k; i < 2 * k; ++i) dev.push_back(data.train.examples[picked[i]]);

    Dataset out;
    out.num_classes = data.num_classes;
    out.train = Corpus::from_examples(std::move(train), data.num_classes, Split::Train);
    out.dev = Corpus::from_examples(std::move(dev), data.num_classes, Split::Dev);
    out.test = data.test;
    return out;
}

namespace {

std::string example_text(const Example& ex, const Vocabulary& vocab) {
    std::string text;
    for (int id : ex.tokens) {
        if (vocab.is_special(id)) continue;
        if (!text.empty()) text += ' ';
        text += vocab.token(id);
    }
    return text;
}

}  // namespace

Corpus render_corpus(const Corpus& corpus, const Template& tmpl, const Vocabulary& vocab,
                     std::size_t max_len) {
    std::vector<Example> rendered;
    rendered.reserve(corpus.examples.size());
    for (const auto& ex : corpus.examples) {
        Example r;
        r.label = ex.label;
        r.tokens = tokenize(tmpl.render(example_text(ex, vocab)), vocab, max_len);
        std::size_t masks = static_cast<std::size_t>(
            std::count(r.tokens.begin(), r.tokens.end(), Vocabulary::kMask));
        if (masks != 1) {
            throw TemplateError("rendered example carries " + std::to_string(masks) +
                                " [MASK] tokens; raise max_len so the mask survives "
                                "truncation");
        }
        rendered.push_back(std::move(r));
    }
    return Corpus::from_examples(std::move(rendered), corpus.num_classes, corpus.split);
}

Dataset render_dataset(const Dataset& data, const Template& tmpl, const Vocabulary& vocab,
                       std::size_t max_len) {
    Dataset out;
    out.num_classes = data.num_classes;
    out.train = render_corpus(data.train, tmpl, vocab, max_len);
    out.dev = render_corpus(data.dev, tmpl, vocab, max_len);
    out.test = render_corpus(data.test, tmpl, vocab, max_len);
    return out;
}

void save_corpus(const Corpus& corpus, const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write corpus file: " + path);
    for (const auto& ex : corpus.examples) {
        out << ex.label << '\t' << example_text(ex, vocab) << "\n";
    }
}

Corpus load_corpus(const std::string& path, const Vocabulary& vocab, std::size_t max_len,
                   std::size_t num_classes, Split split) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path);
    std::vector<Example> examples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": missing tab");
        }
        Example ex;
        ex.label = std::stoi(line.substr(0, tab));
        ex.tokens = tokenize(line.substr(tab + 1), vocab, max_len);
        examples.push_back(std::move(ex));
    }
    return Corpus::from_examples(std::move(examples), num_classes, split);
}

}  // namespace glee
