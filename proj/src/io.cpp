#include "splatstyle/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace splatstyle {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'L', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

void put_u32le(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>((v >> 8) & 0xff),
                                static_cast<unsigned char>((v >> 16) & 0xff),
                                static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error(std::string("tensor block: truncated ") + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32le(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32le(out, bits);
}

} // namespace

void write_tensor_block(std::ostream& out, const std::vector<std::uint32_t>& dims,
                        const double* data) {
    out.write(kMagic, 4);
    put_u32le(out, kVersion);
    out.put(static_cast<char>(kDtypeF32));
    put_u32le(out, static_cast<std::uint32_t>(dims.size()));
    std::size_t count = 1;
    for (std::uint32_t d : dims) {
        put_u32le(out, d);
        count *= d;
    }
    for (std::size_t i = 0; i < count; ++i) put_f32le(out, static_cast<float>(data[i]));
    if (!out) throw std::runtime_error("tensor block: write failed");
}

void read_tensor_block(std::istream& in, std::vector<std::uint32_t>& dims,
                       std::vector<double>& data) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("tensor block: bad magic");
    const std::uint32_t version = get_u32le(in, "version");
    if (version != kVersion)
        throw std::runtime_error("tensor block: unsupported version " + std::to_string(version));
    const int dtype = in.get();
    if (dtype != kDtypeF32)
        throw std::runtime_error("tensor block: unsupported dtype code " + std::to_string(dtype));
    const std::uint32_t rank = get_u32le(in, "rank");
    if (rank == 0 || rank > 8) throw std::runtime_error("tensor block: invalid rank");
    dims.resize(rank);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        dims[i] = get_u32le(in, "dims");
        if (dims[i] == 0)
            throw std::runtime_error("tensor block: dimension " + std::to_string(i) + " is zero");
        count *= dims[i];
    }
    data.resize(count);
    std::vector<unsigned char> raw(count * 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw std::runtime_error("tensor block: truncated payload");
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                             (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                             (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                             (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        data[i] = static_cast<double>(f);
        if (!std::isfinite(data[i]))
            throw std::runtime_error("tensor block: non-finite value at element " + std::to_string(i));
    }
}

void save_stack(const MultiViewLatent& stack, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_stack: cannot open " + path);
    write_tensor_block(out,
                       {static_cast<std::uint32_t>(stack.n_views),
                        static_cast<std::uint32_t>(stack.channels),
                        static_cast<std::uint32_t>(stack.height),
                        static_cast<std::uint32_t>(stack.width)},
                       stack.data.data());
}

MultiViewLatent load_stack(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_stack: cannot open " + path);
    std::vector<std::uint32_t> dims;
    std::vector<double> data;
    read_tensor_block(in, dims, data);
    if (dims.size() != 4)
        throw std::runtime_error("load_stack: expected rank 4, got " + std::to_string(dims.size()));
    MultiViewLatent out(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                        static_cast<int>(dims[2]), static_cast<int>(dims[3]));
    out.data = std::move(data);
    return out;
}

// ---------------------------------------------------------------------------
// Minimal PNG writer: stored (uncompressed) deflate blocks inside a zlib
// stream. Byte-deterministic by construction.

namespace {

std::uint32_t crc32_update(std::uint32_t crc, const unsigned char* buf, std::size_t len) {
    static std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t n = 0; n < 256; ++n) {
            std::uint32_t c = n;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[n] = c;
        }
        return t;
    }();
    crc ^= 0xffffffffu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ buf[i]) & 0xff] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

std::uint32_t adler32(const std::vector<unsigned char>& data) {
    std::uint32_t a = 1, b = 0;
    for (unsigned char c : data) {
        a = (a + c) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

void append_u32be(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>((x >> 24) & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 16) & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
    v.push_back(static_cast<unsigned char>(x & 0xff));
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& payload) {
    append_u32be(out, static_cast<std::uint32_t>(payload.size()));
    std::vector<unsigned char> body(type, type + 4);
    body.insert(body.end(), payload.begin(), payload.end());
    out.insert(out.end(), body.begin(), body.end());
    append_u32be(out, crc32_update(0, body.data(), body.size()));
}

void write_png(const std::string& path, int width, int height, int channels,
               const std::vector<std::uint8_t>& pixels) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("write_png: non-positive dimensions");
    if (pixels.size() != static_cast<std::size_t>(width) * height * channels)
        throw std::invalid_argument("write_png: pixel buffer size mismatch");

    // Raw scanlines: filter byte 0 + pixel bytes per row.
    std::vector<unsigned char> raw;
    raw.reserve(static_cast<std::size_t>(height) * (1 + static_cast<std::size_t>(width) * channels));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = pixels.data() + static_cast<std::size_t>(y) * width * channels;
        raw.insert(raw.end(), row, row + static_cast<std::size_t>(width) * channels);
    }

    // zlib stream with stored deflate blocks.
    std::vector<unsigned char> z;
    z.push_back(0x78);
    z.push_back(0x01);
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const std::size_t n = std::min<std::size_t>(65535, raw.size() - pos);
        const bool final_block = (pos + n == raw.size());
        z.push_back(final_block ? 1 : 0);
        z.push_back(static_cast<unsigned char>(n & 0xff));
        z.push_back(static_cast<unsigned char>((n >> 8) & 0xff));
        z.push_back(static_cast<unsigned char>(~n & 0xff));
        z.push_back(static_cast<unsigned char>((~n >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + pos, raw.begin() + pos + n);
        pos += n;
    }
    append_u32be(z, adler32(raw));

    std::vector<unsigned char> png = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<unsigned char> ihdr;
    append_u32be(ihdr, static_cast<std::uint32_t>(width));
    append_u32be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);                                   // bit depth
    ihdr.push_back(channels == 3 ? 2 : 0);               // color type
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    append_chunk(png, "IHDR", ihdr);
    append_chunk(png, "IDAT", z);
    append_chunk(png, "IEND", {});

    write_file_bytes(path, png.data(), png.size());
}

} // namespace

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb) {
    write_png(path, width, height, 3, rgb);
}

void write_png_gray8(const std::string& path, int width, int height,
                     const std::vector<std::uint8_t>& gray) {
    write_png(path, width, height, 1, gray);
}

void export_png_views(const MultiViewLatent& stack, const std::string& prefix) {
    if (stack.channels != 1 && stack.channels != 3)
        throw std::invalid_argument("export_png_views: only 1- or 3-channel stacks supported, got " +
                                    std::to_string(stack.channels));

    // Per-channel min/max over the whole stack so the views share one mapping.
    std::vector<double> cmin(stack.channels, std::numeric_limits<double>::infinity());
    std::vector<double> cmax(stack.channels, -std::numeric_limits<double>::infinity());
    for (int n = 0; n < stack.n_views; ++n)
        for (int c = 0; c < stack.channels; ++c)
            for (int h = 0; h < stack.height; ++h)
                for (int w = 0; w < stack.width; ++w) {
                    const double v = stack.at(n, c, h, w);
                    cmin[c] = std::min(cmin[c], v);
                    cmax[c] = std::max(cmax[c], v);
                }

    auto to_byte = [&](int c, double v) -> std::uint8_t {
        const double span = cmax[c] - cmin[c];
        double x;
        if (span < 1e-12) {
            x = std::clamp(v, 0.0, 1.0); // constant channel: keep the raw value readable
        } else {
            x = (v - cmin[c]) / span;
        }
        return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
    };

    for (int n = 0; n < stack.n_views; ++n) {
        std::vector<std::uint8_t> px(static_cast<std::size_t>(stack.height) * stack.width *
                                     stack.channels);
        std::size_t k = 0;
        for (int h = 0; h < stack.height; ++h)
            for (int w = 0; w < stack.width; ++w)
                for (int c = 0; c < stack.channels; ++c) px[k++] = to_byte(c, stack.at(n, c, h, w));
        char name[32];
        std::snprintf(name, sizeof(name), "_view%03d.png", n);
        if (stack.channels == 3)
            write_png_rgb8(prefix + name, stack.width, stack.height, px);
        else
            write_png_gray8(prefix + name, stack.width, stack.height, px);
    }

    std::ostringstream json;
    json.precision(17);
    json << "{\n  \"views\": " << stack.n_views << ",\n  \"channels\": " << stack.channels
         << ",\n  \"mode\": \"minmax\",\n  \"per_channel\": [\n";
    for (int c = 0; c < stack.channels; ++c) {
        const bool constant = (cmax[c] - cmin[c]) < 1e-12;
        json << "    {\"min\": " << cmin[c] << ", \"max\": " << cmax[c]
             << ", \"constant\": " << (constant ? "true" : "false") << "}"
             << (c + 1 < stack.channels ? ",\n" : "\n");
    }
    json << "  ]\n}\n";
    const std::string text = json.str();
    write_file_bytes(prefix + "_norm.json", text.data(), text.size());
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_file_bytes: cannot open " + path);
    in.seekg(0, std::ios::end);
    const std::streamoff n = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> out(static_cast<std::size_t>(n));
    if (n > 0) in.read(reinterpret_cast<char*>(out.data()), n);
    if (!in) throw std::runtime_error("read_file_bytes: read failed for " + path);
    return out;
}

void write_file_bytes(const std::string& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_file_bytes: cannot open " + path);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw std::runtime_error("write_file_bytes: write failed for " + path);
}

} // namespace splatstyle
