#include "gaple/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gaple/errors.hpp"

namespace gaple {

namespace {

void pack_le(double value, unsigned char out[8]) {
    uint64_t bits;
    std::memcpy(&bits, &value, 8);
    for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
}

double unpack_le(const unsigned char in[8]) {
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(in[i]) << (8 * i);
    double value;
    std::memcpy(&value, &bits, 8);
    return value;
}

}  // namespace

void write_param_file(const std::string& path, const std::string& magic,
                      std::span<const double> values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << magic << '\n' << values.size() << '\n';
    std::vector<unsigned char> buf(values.size() * 8);
    for (size_t i = 0; i < values.size(); ++i) pack_le(values[i], buf.data() + 8 * i);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError(path + ": write failed");
}

std::vector<double> read_param_file(const std::string& path, const std::string& magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": file not found");
    std::string header;
    if (!std::getline(in, header)) throw IoError(path + ": truncated header");
    if (header != magic) {
        throw IoError(path + ": bad magic '" + header + "', expected '" + magic + "'");
    }
    std::string count_line;
    if (!std::getline(in, count_line)) throw IoError(path + ": missing parameter count");
    size_t count = 0;
    try {
        count = std::stoull(count_line);
    } catch (const std::exception&) {
        throw IoError(path + ": bad parameter count '" + count_line + "'");
    }
    std::vector<unsigned char> buf(count * 8);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(in.gcount()) != buf.size()) {
        throw IoError(path + ": truncated parameter data");
    }
    std::vector<double> values(count);
    for (size_t i = 0; i < count; ++i) values[i] = unpack_le(buf.data() + 8 * i);
    return values;
}

void write_semantic_pgm(const std::string& path, const RenderOutput& render) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "P5\n" << render.width << ' ' << render.height << "\n255\n";
    std::vector<unsigned char> row(render.width);
    for (int y = 0; y < render.height; ++y) {
        for (int x = 0; x < render.width; ++x) {
            row[x] = static_cast<unsigned char>(std::min<uint16_t>(render.semantic[render.pixel(x, y)], 255));
        }
        out.write(reinterpret_cast<const char*>(row.data()), render.width);
    }
    if (!out) throw IoError(path + ": write failed");
}

void write_depth_pgm(const std::string& path, const RenderOutput& render) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "P5\n" << render.width << ' ' << render.height << "\n65535\n";
    std::vector<unsigned char> row(static_cast<size_t>(render.width) * 2);
    for (int y = 0; y < render.height; ++y) {
        for (int x = 0; x < render.width; ++x) {
            const double mm = std::clamp(render.depth[render.pixel(x, y)] * 1000.0, 0.0, 65535.0);
            const uint16_t v = static_cast<uint16_t>(std::lround(mm));
            row[2 * x] = static_cast<unsigned char>(v >> 8);  // big-endian per PGM
            row[2 * x + 1] = static_cast<unsigned char>(v & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError(path + ": write failed");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": file not found");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << content;
    if (!out) throw IoError(path + ": write failed");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace gaple
