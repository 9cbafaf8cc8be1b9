#include "nos/core/container.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nos/core/errors.hpp"

namespace nos {

static_assert(std::endian::native == std::endian::little, "container IO assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'N', 'O', 'S', 'G'};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : buf(b) {}

    void need(std::size_t n, const char* what) const {
        if (buf.size() - pos < n) {
            throw ParseError(std::string("truncated ") + what + ": need " + std::to_string(n) + " bytes, " +
                                 std::to_string(buf.size() - pos) + " remain",
                             pos);
        }
    }
    void read(void* p, std::size_t n, const char* what) {
        need(n, what);
        std::memcpy(p, buf.data() + pos, n);
        pos += n;
    }
    std::uint32_t u32(const char* what) {
        std::uint32_t v;
        read(&v, 4, what);
        return v;
    }
    std::uint64_t u64(const char* what) {
        std::uint64_t v;
        read(&v, 8, what);
        return v;
    }
    std::string str(const char* what) {
        const std::uint32_t n = u32(what);
        need(n, what);
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
        pos += n;
        return s;
    }

    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;
};

std::string header_text(const std::map<std::string, std::string>& h) {
    std::string s;
    for (const auto& [k, v] : h) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw ConfigError("container header entries may not contain '=' in keys or newlines: " + k);
        }
        s += k + "=" + v + "\n";
    }
    return s;
}

}  // namespace

const Block& Container::block(const std::string& name) const {
    for (const Block& b : blocks)
        if (b.name == name) return b;
    throw InputError("container (" + kind + ") has no block '" + name + "'");
}

bool Container::has_block(const std::string& name) const {
    for (const Block& b : blocks)
        if (b.name == name) return true;
    return false;
}

const std::string& Container::get(const std::string& key) const {
    auto it = header.find(key);
    if (it == header.end()) throw InputError("container (" + kind + ") header lacks '" + key + "'");
    return it->second;
}

double Container::get_double(const std::string& key) const { return parse_double(get(key)); }

std::uint64_t Container::get_u64(const std::string& key) const {
    const std::string& s = get(key);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw InputError("header '" + key + "' is not an unsigned integer: " + s);
    }
    return v;
}

void Container::set(const std::string& key, double v) { header[key] = format_double(v); }
void Container::set(const std::string& key, std::uint64_t v) { header[key] = std::to_string(v); }
void Container::set(const std::string& key, std::string v) { header[key] = std::move(v); }

void Container::add_block(std::string name, std::vector<std::uint64_t> shape, std::vector<double> data) {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    if (n != data.size()) throw DimensionError("block '" + name + "' shape does not match its data");
    blocks.push_back({std::move(name), std::move(shape), std::move(data)});
}

std::vector<std::uint8_t> encode(const Container& c) {
    Writer w;
    w.bytes(kMagic, 4);
    w.u32(Container::kVersion);
    w.str(c.kind);
    w.str(header_text(c.header));
    w.u32(static_cast<std::uint32_t>(c.blocks.size()));
    for (const Block& b : c.blocks) {
        w.str(b.name);
        w.u32(static_cast<std::uint32_t>(b.shape.size()));
        for (auto d : b.shape) w.u64(d);
        w.bytes(b.data.data(), b.data.size() * sizeof(double));
    }
    return std::move(w.out);
}

Container decode(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    char magic[4];
    r.read(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw ParseError("bad magic bytes, not a NOSG file", 0);
    const std::size_t version_at = r.pos;
    const std::uint32_t version = r.u32("version");
    if (version != Container::kVersion) {
        throw ParseError("unsupported format version " + std::to_string(version), version_at);
    }
    Container c;
    c.kind = r.str("kind tag");
    const std::size_t header_at = r.pos;
    std::istringstream hs(r.str("header"));
    for (std::string line; std::getline(hs, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("header line without '=': " + line, header_at);
        c.header[line.substr(0, eq)] = line.substr(eq + 1);
    }
    const std::uint32_t n_blocks = r.u32("block count");
    for (std::uint32_t b = 0; b < n_blocks; ++b) {
        Block blk;
        blk.name = r.str("block name");
        const std::uint32_t rank = r.u32("block rank");
        if (rank > 8) throw ParseError("block '" + blk.name + "' has implausible rank " + std::to_string(rank), r.pos - 4);
        std::uint64_t n = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
            blk.shape.push_back(r.u64("block shape"));
            n *= blk.shape.back();
        }
        const std::size_t data_at = r.pos;
        const std::size_t remain = bytes.size() - r.pos;
        if (n > remain / sizeof(double)) {
            throw ParseError("block '" + blk.name + "' truncated: expected " + std::to_string(n) + " values (" +
                                 std::to_string(n * sizeof(double)) + " bytes), found " + std::to_string(remain) +
                                 " bytes",
                             data_at);
        }
        blk.data.resize(n);
        r.read(blk.data.data(), n * sizeof(double), "block data");
        c.blocks.push_back(std::move(blk));
    }
    if (r.pos != bytes.size()) throw ParseError("trailing bytes after last block", r.pos);
    return c;
}

void write_container(const std::string& path, const Container& c) {
    const std::vector<std::uint8_t> bytes = encode(c);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write to '" + path + "' failed");
}

Container read_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode(bytes);
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

double parse_double(const std::string& text) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size()) throw InputError("not a number: '" + text + "'");
    return v;
}

}  // namespace nos
