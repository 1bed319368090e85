#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glee/matrix.hpp"

// GLEE container format, kind 1: named parameter blocks.
//
//   magic   "GLEE"            4 bytes
//   version u16 little-endian (currently 1)
//   kind    u8                (1 = parameter blocks; 0 is the feature file)
//   count   u32               number of blocks
//   blocks: name_len u32, name bytes, rows u64, cols u64,
//           rows*cols little-endian f64
//
// Scalars travel as 1x1 blocks. Any bytes after the declared blocks are a
// format error.

namespace glee {

constexpr std::uint16_t kGleeFormatVersion = 1;
constexpr std::uint8_t kGleeKindFeatures = 0;
constexpr std::uint8_t kGleeKindBlocks = 1;

struct NamedBlock {
    std::string name;
    RealMatrix value;
};

class BlockFile {
public:
    void add(const std::string& name, RealMatrix value);
    void add_scalar(const std::string& name, double value);

    bool has(const std::string& name) const;
    const RealMatrix& get(const std::string& name) const;  // FormatError if missing
    double get_scalar(const std::string& name) const;      // requires 1x1

    const std::vector<NamedBlock>& blocks() const { return blocks_; }

    void save(const std::string& path) const;
    static BlockFile load(const std::string& path);

private:
    std::vector<NamedBlock> blocks_;
};

}  // namespace glee
