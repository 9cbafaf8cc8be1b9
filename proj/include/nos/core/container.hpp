#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nos {

/// One named array of little-endian f64 values.
struct Block {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::vector<double> data;
};

/// Self-describing binary container shared by datasets and checkpoints.
///
/// Layout: "NOSG", u32 version, then length-prefixed strings for the kind
/// tag and a key=value header text, a u32 block count and the blocks
/// (name, u32 rank, u64 dims, f64 data). Integers are little-endian.
struct Container {
    static constexpr std::uint32_t kVersion = 1;

    std::string kind;
    std::map<std::string, std::string> header;
    std::vector<Block> blocks;

    const Block& block(const std::string& name) const;
    bool has_block(const std::string& name) const;
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    void set(const std::string& key, double v);
    void set(const std::string& key, std::uint64_t v);
    void set(const std::string& key, std::string v);
    void add_block(std::string name, std::vector<std::uint64_t> shape, std::vector<double> data);
};

std::vector<std::uint8_t> encode(const Container& c);
/// Throws ParseError carrying the byte offset of the first inconsistency.
Container decode(const std::vector<std::uint8_t>& bytes);

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

}  // namespace nos
