#include "uf/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace uf {

namespace {

const uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<uint8_t>& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw IOError("write failed for " + path.string());
}

uint8_t quantize(float p) {
    const float c = std::clamp(p, 0.f, 1.f);
    return static_cast<uint8_t>(std::lround(c * 255.f));
}

// --- PGM (P5) ---------------------------------------------------------------

// Skips whitespace and '#' comments between header tokens.
int64_t pgm_token(const std::vector<uint8_t>& buf, size_t& pos) {
    while (pos < buf.size()) {
        if (std::isspace(buf[pos])) {
            ++pos;
        } else if (buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= buf.size() || !std::isdigit(buf[pos])) throw FormatError("malformed PGM header");
    int64_t v = 0;
    while (pos < buf.size() && std::isdigit(buf[pos])) v = v * 10 + (buf[pos++] - '0');
    return v;
}

GrayImage load_pgm(const std::vector<uint8_t>& buf) {
    size_t pos = 2;  // past "P5"
    const int64_t w = pgm_token(buf, pos);
    const int64_t h = pgm_token(buf, pos);
    const int64_t maxval = pgm_token(buf, pos);
    if (w < 1 || h < 1) throw FormatError("bad PGM dimensions");
    if (maxval != 255) throw FormatError("only 8-bit PGM (maxval 255) is supported");
    if (pos >= buf.size() || !std::isspace(buf[pos])) throw FormatError("malformed PGM header");
    ++pos;  // single whitespace before raster
    if (buf.size() - pos < static_cast<size_t>(w * h)) throw FormatError("PGM raster truncated");
    GrayImage img(w, h);
    for (int64_t i = 0; i < w * h; ++i)
        img.pixels[static_cast<size_t>(i)] = static_cast<float>(buf[pos + static_cast<size_t>(i)]) / 255.f;
    return img;
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::vector<uint8_t> buf;
    const std::string header =
        "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    buf.insert(buf.end(), header.begin(), header.end());
    for (float p : img.pixels) buf.push_back(quantize(p));
    write_file(path, buf);
}

// --- PNG --------------------------------------------------------------------

void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_u32be(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) << 24 | static_cast<uint32_t>(p[1]) << 16 |
           static_cast<uint32_t>(p[2]) << 8 | static_cast<uint32_t>(p[3]);
}

void put_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
    put_u32be(out, static_cast<uint32_t>(data.size()));
    const size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uint32_t crc = static_cast<uint32_t>(
        ::crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size())));
    put_u32be(out, crc);
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
    const int64_t w = img.width, h = img.height;
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<size_t>(h * (w + 1)));
    for (int64_t y = 0; y < h; ++y) {
        raw.push_back(0);  // filter: none
        for (int64_t x = 0; x < w; ++x) raw.push_back(quantize(img.at(y, x)));
    }
    uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> z(zlen);
    if (compress2(z.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw IOError("PNG compression failed");
    z.resize(zlen);

    std::vector<uint8_t> out(kPngSig, kPngSig + 8);
    std::vector<uint8_t> ihdr;
    put_u32be(ihdr, static_cast<uint32_t>(w));
    put_u32be(ihdr, static_cast<uint32_t>(h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);  // deflate
    ihdr.push_back(0);  // adaptive filtering
    ihdr.push_back(0);  // no interlace
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", z);
    put_chunk(out, "IEND", {});
    write_file(path, out);
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

GrayImage load_png(const std::vector<uint8_t>& buf) {
    if (buf.size() < 8 + 12) throw FormatError("PNG too short");
    size_t pos = 8;
    int64_t w = 0, h = 0;
    int color_type = -1;
    std::vector<uint8_t> idat;
    bool seen_ihdr = false, seen_iend = false;
    while (pos + 12 <= buf.size() && !seen_iend) {
        const uint32_t len = get_u32be(buf.data() + pos);
        if (pos + 12 + len > buf.size()) throw FormatError("PNG chunk truncated");
        const char* type = reinterpret_cast<const char*>(buf.data() + pos + 4);
        const uint8_t* data = buf.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw FormatError("bad IHDR");
            w = get_u32be(data);
            h = get_u32be(data + 4);
            const int bit_depth = data[8];
            color_type = data[9];
            if (bit_depth != 8) throw FormatError("only 8-bit PNG is supported");
            if (color_type != 0 && color_type != 2 && color_type != 4 && color_type != 6)
                throw FormatError("unsupported PNG color type " + std::to_string(color_type));
            if (data[12] != 0) throw FormatError("interlaced PNG is not supported");
            seen_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr || idat.empty() || w < 1 || h < 1) throw FormatError("PNG missing data");

    const int channels = color_type == 0 ? 1 : color_type == 2 ? 3 : color_type == 4 ? 2 : 4;
    const int64_t stride = w * channels;
    std::vector<uint8_t> raw(static_cast<size_t>(h * (stride + 1)));
    uLongf rawlen = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &rawlen, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        rawlen != raw.size())
        throw FormatError("PNG inflate failed");

    // undo per-row filters in place
    std::vector<uint8_t> prev(static_cast<size_t>(stride), 0);
    GrayImage img(w, h);
    std::vector<uint8_t> row(static_cast<size_t>(stride));
    for (int64_t y = 0; y < h; ++y) {
        const uint8_t* src = raw.data() + static_cast<size_t>(y * (stride + 1));
        const uint8_t filter = src[0];
        ++src;
        for (int64_t i = 0; i < stride; ++i) {
            const int a = i >= channels ? row[static_cast<size_t>(i - channels)] : 0;
            const int b = prev[static_cast<size_t>(i)];
            const int c = i >= channels ? prev[static_cast<size_t>(i - channels)] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw FormatError("bad PNG filter type");
            }
            row[static_cast<size_t>(i)] = static_cast<uint8_t>(v & 0xff);
        }
        for (int64_t x = 0; x < w; ++x) {
            const uint8_t* px = row.data() + static_cast<size_t>(x * channels);
            float g;
            if (channels <= 2) {
                g = static_cast<float>(px[0]);
            } else {
                g = 0.299f * px[0] + 0.587f * px[1] + 0.114f * px[2];
            }
            img.at(y, x) = g / 255.f;
        }
        prev = row;
    }
    return img;
}

}  // namespace

GrayImage load_image(const std::filesystem::path& path) {
    const std::vector<uint8_t> buf = read_file(path);
    if (buf.size() >= 8 && std::memcmp(buf.data(), kPngSig, 8) == 0) return load_png(buf);
    if (buf.size() >= 2 && buf[0] == 'P' && buf[1] == '5') return load_pgm(buf);
    throw FormatError(path.string() + " is neither PNG nor P5 PGM");
}

void save_image(const GrayImage& img, const std::filesystem::path& path) {
    if (img.width < 1 || img.height < 1) throw ShapeError("cannot save an empty image");
    const std::string ext = path.extension().string();
    if (ext == ".png") {
        save_png(img, path);
    } else if (ext == ".pgm") {
        save_pgm(img, path);
    } else {
        throw FormatError("unsupported image extension '" + ext + "' (use .png or .pgm)");
    }
}

}  // namespace uf
