#include "glee/features.hpp"

#include <cstring>
#include <fstream>

#include "glee/error.hpp"
#include "glee/serialize.hpp"

namespace glee {

namespace {

constexpr char kMagic[4] = {'G', 'L', 'E', 'E'};

template <typename T>
void write_le(std::ofstream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

struct Reader {
    std::ifstream in;
    std::string path;
    std::uint64_t offset = 0;

    void read_bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) {
            throw FormatError(path + ": truncated at byte offset " + std::to_string(offset));
        }
        offset += n;
    }

    template <typename T>
    T read_le() {
        unsigned char buf[sizeof(T)];
        read_bytes(buf, sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        }
        return static_cast<T>(v);
    }
};

}  // namespace

FeatureDataset make_feature_dataset(RealMatrix features, std::vector<int> labels,
                                    std::size_t num_classes) {
    if (labels.size() != features.rows) {
        throw DimensionError("feature dataset: " + std::to_string(features.rows) +
                             " rows vs " + std::to_string(labels.size()) + " labels");
    }
    FeatureDataset d;
    d.class_counts.assign(num_classes, 0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
            throw IndexError("feature dataset: label " + std::to_string(y) +
                             " outside [0, " + std::to_string(num_classes) + ")");
        }
        ++d.class_counts[static_cast<std::size_t>(y)];
    }
    d.features = std::move(features);
    d.labels = std::move(labels);
    return d;
}

void write_features(const FeatureDataset& data, const std::string& path) {
    if (data.size() == 0) throw EmptyInputError("write_features: empty dataset");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_features: cannot open " + path);
    out.write(kMagic, 4);
    write_le<std::uint16_t>(out, kGleeFormatVersion);
    write_le<std::uint8_t>(out, kGleeKindFeatures);
    write_le<std::uint64_t>(out, data.size());
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.features.cols));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.num_classes()));
    for (int y : data.labels) write_le<std::uint32_t>(out, static_cast<std::uint32_t>(y));
    for (double v : data.features.data) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        write_le(out, bits);
    }
    if (!out) throw IoError("write_features: write failed on " + path);
}

FeatureDataset ingest_features(const std::string& path) {
    Reader r;
    r.path = path;
    r.in.open(path, std::ios::binary);
    if (!r.in) throw IoError("ingest_features: cannot open " + path);

    char magic[4];
    r.read_bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError(path + ": bad magic at byte offset 0");
    }
    const auto version = r.read_le<std::uint16_t>();
    if (version != kGleeFormatVersion) {
        throw FormatError(path + ": unsupported version " + std::to_string(version) +
                          " at byte offset 4");
    }
    const auto kind = r.read_le<std::uint8_t>();
    if (kind != kGleeKindFeatures) {
        throw FormatError(path + ": kind " + std::to_string(kind) +
                          " is not a feature file (byte offset 6)");
    }
    const auto n = r.read_le<std::uint64_t>();
    if (n == 0) throw FormatError(path + ": empty dataset (n = 0)");
    const auto d = r.read_le<std::uint32_t>();
    const auto C = r.read_le<std::uint32_t>();
    if (d == 0 || C < 2) {
        throw FormatError(path + ": implausible header d=" + std::to_string(d) +
                          " C=" + std::to_string(C));
    }

    std::vector<int> labels(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto y = r.read_le<std::uint32_t>();
        if (y >= C) {
            throw FormatError(path + ": label " + std::to_string(y) + " >= C at byte offset " +
                              std::to_string(r.offset - 4));
        }
        labels[i] = static_cast<int>(y);
    }
    RealMatrix features(n, d);
    for (auto& v : features.data) {
        std::uint64_t bits = r.read_le<std::uint64_t>();
        double x;
        std::memcpy(&x, &bits, sizeof(x));
        v = x;
    }
    char extra;
    if (r.in.read(&extra, 1)) {
        throw FormatError(path + ": trailing bytes at offset " + std::to_string(r.offset));
    }
    return make_feature_dataset(std::move(features), std::move(labels), C);
}

}  // namespace glee
