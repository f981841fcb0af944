#include "itsc/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "itsc/common.hpp"

namespace itsc::nn {

namespace {

constexpr char kMagic[8] = {'I', 'T', 'S', 'N', 'E', 'T', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out.write(buf, 8);
}

std::uint64_t read_u64(std::istream& in) {
    char buf[8];
    in.read(buf, 8);
    if (!in) throw DataError("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    }
    return v;
}

void write_double(std::ostream& out, double d) { write_u64(out, std::bit_cast<std::uint64_t>(d)); }

double read_double(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

}  // namespace

void save_checkpoint(const std::string& path, const std::map<std::string, Tensor>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot open " + path + " for writing");
    out.write(kMagic, sizeof(kMagic));
    write_u64(out, tensors.size());
    for (const auto& [name, tensor] : tensors) {
        write_u64(out, name.size());
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u64(out, tensor.rank());
        for (std::size_t d : tensor.shape) write_u64(out, d);
        for (double v : tensor.data) write_double(out, v);
    }
    if (!out) throw DataError("checkpoint: write failed for " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 8, kMagic)) {
        throw DataError("checkpoint: " + path + " is not a recognized checkpoint file");
    }
    const std::uint64_t count = read_u64(in);
    std::map<std::string, Tensor> tensors;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t name_len = read_u64(in);
        std::string name(name_len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(name_len));
        if (!in) throw DataError("checkpoint: truncated file");
        const std::uint64_t rank = read_u64(in);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(read_u64(in));
        Tensor t(shape);
        for (double& v : t.data) v = read_double(in);
        tensors.emplace(std::move(name), std::move(t));
    }
    return tensors;
}

}  // namespace itsc::nn
