#include "uf/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>
#include <vector>

namespace uf {

namespace {

constexpr char kMagic[4] = {'U', 'F', 'G', 'R'};
constexpr uint32_t kVersion = 1;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<uint8_t>& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

class Reader {
public:
    Reader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str(size_t len) {
        need(len);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), len);
        pos_ += len;
        return s;
    }
    size_t remaining() const { return size_ - pos_; }

private:
    void need(size_t n) const {
        if (pos_ + n > size_) throw IntegrityError("checkpoint truncated");
    }
    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

uint32_t crc_of(const uint8_t* data, size_t size) {
    return static_cast<uint32_t>(::crc32(0L, data, static_cast<uInt>(size)));
}

}  // namespace

void save_checkpoint(const Model& m, const std::filesystem::path& path) {
    std::vector<uint8_t> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<uint32_t>(m.config.scales));
    put_u32(buf, static_cast<uint32_t>(m.config.dilation));
    buf.push_back(m.config.padding == PadMode::valid ? 0 : 1);
    buf.push_back(m.config.fusion == Fusion::concat ? 0 : 1);
    put_u32(buf, static_cast<uint32_t>(m.params.size()));

    for (const auto& p : m.params) {
        put_u16(buf, static_cast<uint16_t>(p.name.size()));
        buf.insert(buf.end(), p.name.begin(), p.name.end());
        buf.push_back(static_cast<uint8_t>(p.serial_rank));
        const Shape& s = p.tensor.shape();
        if (p.serial_rank == 4) {
            put_u32(buf, static_cast<uint32_t>(s.n));
            put_u32(buf, static_cast<uint32_t>(s.c));
            put_u32(buf, static_cast<uint32_t>(s.h));
            put_u32(buf, static_cast<uint32_t>(s.w));
        } else {
            put_u32(buf, static_cast<uint32_t>(p.tensor.numel()));
        }
        for (float v : p.tensor.values()) put_f32(buf, v);
    }

    put_u32(buf, crc_of(buf.data(), buf.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IOError("write failed for " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path.string());
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw FormatError("bad checkpoint magic in " + path.string());
    if (buf.size() < 8 + 4) throw IntegrityError("checkpoint truncated");
    const uint32_t stored_crc = static_cast<uint32_t>(buf[buf.size() - 4]) |
                                static_cast<uint32_t>(buf[buf.size() - 3]) << 8 |
                                static_cast<uint32_t>(buf[buf.size() - 2]) << 16 |
                                static_cast<uint32_t>(buf[buf.size() - 1]) << 24;
    if (crc_of(buf.data(), buf.size() - 4) != stored_crc)
        throw IntegrityError("checkpoint CRC mismatch in " + path.string());

    Reader rd(buf.data(), buf.size() - 4);
    rd.str(4);  // magic, already checked
    const uint32_t version = rd.u32();
    if (version != kVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));

    NetworkConfig cfg;
    cfg.scales = rd.u32();
    cfg.dilation = rd.u32();
    const uint8_t pad = rd.u8();
    if (pad > 1) throw FormatError("bad padding code in checkpoint");
    cfg.padding = pad == 0 ? PadMode::valid : PadMode::same;
    const uint8_t fus = rd.u8();
    if (fus > 1) throw FormatError("bad fusion code in checkpoint");
    cfg.fusion = fus == 0 ? Fusion::concat : Fusion::sum;

    Model m = build<float>(cfg, 0);
    std::unordered_map<std::string, ParamEntry<float>*> by_name;
    for (auto& p : m.params) by_name[p.name] = &p;

    const uint32_t count = rd.u32();
    if (count != m.params.size())
        throw IntegrityError("checkpoint lists " + std::to_string(count) + " parameters, config " +
                             "requires " + std::to_string(m.params.size()));

    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t name_len = rd.u16();
        const std::string name = rd.str(name_len);
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw IntegrityError("checkpoint parameter '" + name + "' not in model");
        ParamEntry<float>& p = *it->second;
        const uint8_t rank = rd.u8();
        if (rank != p.serial_rank)
            throw IntegrityError("rank mismatch for '" + name + "'");
        int64_t numel = 1;
        std::array<uint32_t, 4> ext{};
        for (int r = 0; r < rank; ++r) {
            ext[static_cast<size_t>(r)] = rd.u32();
            numel *= ext[static_cast<size_t>(r)];
        }
        if (numel != p.tensor.numel())
            throw IntegrityError("shape mismatch for '" + name + "': header says " +
                                 std::to_string(numel) + " values, model has " +
                                 std::to_string(p.tensor.numel()));
        if (rank == 4) {
            const Shape& s = p.tensor.shape();
            if (ext[0] != s.n || ext[1] != s.c || ext[2] != s.h || ext[3] != s.w)
                throw IntegrityError("extent mismatch for '" + name + "'");
        }
        for (int64_t j = 0; j < numel; ++j) p.tensor.values()[static_cast<size_t>(j)] = rd.f32();
    }
    if (rd.remaining() != 0) throw IntegrityError("trailing bytes in checkpoint");
    return m;
}

}  // namespace uf
