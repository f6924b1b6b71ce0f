#include "mgml/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mgml {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw IoError("truncated file " + path);
    }
    return v;
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw IoError("truncated file " + path);
    }
    return v;
}

void write_doubles(std::ostream& out, std::span<const double> values) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_doubles(std::istream& in, std::span<double> values, const std::string& path) {
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(double)))) {
        throw IoError("truncated payload in " + path);
    }
}

void check_magic(std::istream& in, const char* magic, const std::string& path) {
    char buf[4];
    if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
        throw IoError("bad magic in " + path + " (expected " + magic + ")");
    }
}

} // namespace

void save_tensor(const Tensor& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write("MGT1", 4);
    const Shape s = t.shape();
    write_u32(out, static_cast<std::uint32_t>(s.n));
    write_u32(out, static_cast<std::uint32_t>(s.c));
    write_u32(out, static_cast<std::uint32_t>(s.h));
    write_u32(out, static_cast<std::uint32_t>(s.w));
    write_doubles(out, t.data());
    if (!out) throw IoError("failed writing " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    check_magic(in, "MGT1", path);
    Shape s;
    s.n = static_cast<int>(read_u32(in, path));
    s.c = static_cast<int>(read_u32(in, path));
    s.h = static_cast<int>(read_u32(in, path));
    s.w = static_cast<int>(read_u32(in, path));
    Tensor t(s);
    read_doubles(in, t.data(), path);
    return t;
}

void save_checkpoint(const std::vector<ParamPtr>& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write("MGC1", 4);
    write_u32(out, static_cast<std::uint32_t>(params.size()));
    std::uint64_t offset = 0;
    for (const ParamPtr& p : params) {
        const std::string& name = p->name;
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        const Shape s = p->value().shape();
        write_u32(out, static_cast<std::uint32_t>(s.n));
        write_u32(out, static_cast<std::uint32_t>(s.c));
        write_u32(out, static_cast<std::uint32_t>(s.h));
        write_u32(out, static_cast<std::uint32_t>(s.w));
        write_u64(out, offset);
        offset += p->value().numel() * sizeof(double);
    }
    for (const ParamPtr& p : params) write_doubles(out, p->value().data());
    if (!out) throw IoError("failed writing " + path);
}

void load_checkpoint(std::vector<ParamPtr>& params, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    check_magic(in, "MGC1", path);
    const std::uint32_t count = read_u32(in, path);
    if (count != params.size()) {
        throw IoError("checkpoint " + path + " holds " + std::to_string(count) +
                      " parameters, model has " + std::to_string(params.size()));
    }
    for (const ParamPtr& p : params) {
        const std::uint32_t name_len = read_u32(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw IoError("truncated file " + path);
        if (name != p->name) {
            throw IoError("checkpoint parameter '" + name + "' does not match model '" +
                          p->name + "'");
        }
        Shape s;
        s.n = static_cast<int>(read_u32(in, path));
        s.c = static_cast<int>(read_u32(in, path));
        s.h = static_cast<int>(read_u32(in, path));
        s.w = static_cast<int>(read_u32(in, path));
        if (s != p->value().shape()) {
            throw IoError("checkpoint shape " + s.str() + " does not match " +
                          p->name + " shape " + p->value().shape().str());
        }
        read_u64(in, path);  // offset; blocks follow in manifest order
    }
    for (ParamPtr& p : params) read_doubles(in, p->value().data(), path);
}

} // namespace mgml
