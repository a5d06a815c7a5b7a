#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "tvu/common.hpp"

namespace tvu {

/// Raw float64 array files, explicitly little-endian so datasets and
/// checkpoints are portable across platforms.
inline void write_f64(const std::filesystem::path& path, const Vector& v) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof bits);
        unsigned char buf[8];
        for (int b = 0; b < 8; ++b) buf[b] = static_cast<unsigned char>(bits >> (8 * b));
        out.write(reinterpret_cast<const char*>(buf), 8);
    }
    if (!out) throw FormatError("write failed: " + path.string());
}

inline Vector read_f64(const std::filesystem::path& path, std::size_t expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("missing file: " + path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::uint64_t>(in.tellg());
    if (bytes != 8 * static_cast<std::uint64_t>(expected))
        throw FormatError("size mismatch in " + path.string() + ": expected " +
                          std::to_string(8 * expected) + " bytes, found " +
                          std::to_string(bytes));
    in.seekg(0, std::ios::beg);
    Vector v(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        unsigned char buf[8];
        in.read(reinterpret_cast<char*>(buf), 8);
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
        std::memcpy(&v[i], &bits, sizeof(double));
    }
    if (!in) throw FormatError("read failed: " + path.string());
    return v;
}

/// Flat key=value manifests used by checkpoints.
inline void write_manifest(const std::filesystem::path& path,
                           const std::map<std::string, std::string>& kv) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    for (const auto& [key, value] : kv) out << key << "=" << value << "\n";
}

inline std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("missing manifest: " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("malformed manifest line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace tvu
