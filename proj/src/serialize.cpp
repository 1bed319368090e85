#include "glee/serialize.hpp"

#include <cstring>
#include <fstream>

#include "glee/error.hpp"

namespace glee {

namespace {

constexpr char kMagic[4] = {'G', 'L', 'E', 'E'};

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_le(std::ofstream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    }
    write_bytes(out, buf, sizeof(T));
}

void write_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_le(out, bits);
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

    double read_f64() {
        std::uint64_t bits = read_le<std::uint64_t>();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    void expect_eof() {
        char c;
        if (in.read(&c, 1)) {
            throw FormatError(path + ": trailing bytes at offset " + std::to_string(offset));
        }
    }
};

}  // namespace

void BlockFile::add(const std::string& name, RealMatrix value) {
    blocks_.push_back({name, std::move(value)});
}

void BlockFile::add_scalar(const std::string& name, double value) {
    RealMatrix m(1, 1);
    m.at(0, 0) = value;
    add(name, std::move(m));
}

bool BlockFile::has(const std::string& name) const {
    for (const auto& b : blocks_) {
        if (b.name == name) return true;
    }
    return false;
}

const RealMatrix& BlockFile::get(const std::string& name) const {
    for (const auto& b : blocks_) {
        if (b.name == name) return b.value;
    }
    throw FormatError("missing block '" + name + "'");
}

double BlockFile::get_scalar(const std::string& name) const {
    const RealMatrix& m = get(name);
    if (m.rows != 1 || m.cols != 1) {
        throw FormatError("block '" + name + "' is not a scalar");
    }
    return m.at(0, 0);
}

void BlockFile::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    write_bytes(out, kMagic, 4);
    write_le<std::uint16_t>(out, kGleeFormatVersion);
    write_le<std::uint8_t>(out, kGleeKindBlocks);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(blocks_.size()));
    for (const auto& b : blocks_) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
        write_bytes(out, b.name.data(), b.name.size());
        write_le<std::uint64_t>(out, b.value.rows);
        write_le<std::uint64_t>(out, b.value.cols);
        for (double v : b.value.data) write_f64(out, v);
    }
    if (!out) throw IoError("write failed: " + path);
}

BlockFile BlockFile::load(const std::string& path) {
    Reader r;
    r.path = path;
    r.in.open(path, std::ios::binary);
    if (!r.in) throw IoError("cannot open file: " + path);

    char magic[4];
    r.read_bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError(path + ": bad magic at byte offset 0");
    }
    auto version = r.read_le<std::uint16_t>();
    if (version != kGleeFormatVersion) {
        throw FormatError(path + ": unsupported format version " + std::to_string(version));
    }
    auto kind = r.read_le<std::uint8_t>();
    if (kind != kGleeKindBlocks) {
        throw FormatError(path + ": expected block file (kind 1), got kind " +
                          std::to_string(kind));
    }
    auto count = r.read_le<std::uint32_t>();

    BlockFile file;
    for (std::uint32_t i = 0; i < count; ++i) {
        auto name_len = r.read_le<std::uint32_t>();
        std::string name(name_len, '\0');
        r.read_bytes(name.data(), name_len);
        auto rows = r.read_le<std::uint64_t>();
        auto cols = r.read_le<std::uint64_t>();
        RealMatrix m(rows, cols);
        for (auto& v : m.data) v = r.read_f64();
        file.blocks_.push_back({std::move(name), std::move(m)});
    }
    r.expect_eof();
    return file;
}

}  // namespace glee
