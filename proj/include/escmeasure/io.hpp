#pragma once

// Deterministic file output: CSV, binary PPM rasters, run manifests.
// All text uses LF line endings and '.' as the decimal separator;
// floats print with 17 significant digits so they round-trip.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace escm::io {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_int(long long v) { return std::to_string(v); }

struct CsvWriter {
    explicit CsvWriter(std::vector<std::string> header) : cols(std::move(header)) {}

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != cols.size())
            throw precondition_error("CsvWriter: cell count mismatch");
        rows.push_back(cells);
    }

    std::string str() const {
        std::ostringstream os;
        join(os, cols);
        for (const auto& r : rows) join(os, r);
        return os.str();
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw numeric_error("CsvWriter: cannot open " + path);
        f << str();
    }

    std::vector<std::string> cols;
    std::vector<std::vector<std::string>> rows;

private:
    static void join(std::ostringstream& os, const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) os << ',';
            os << cells[i];
        }
        os << '\n';
    }
};

// Binary PPM (P6).
struct Raster {
    int width = 0, height = 0;
    std::vector<uint8_t> rgb;  // 3 bytes per pixel, row-major from the top

    Raster(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0) {
        if (w <= 0 || h <= 0) throw precondition_error("Raster: empty grid");
    }

    void set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
        const size_t i = 3 * (static_cast<size_t>(y) * width + x);
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
    }

    std::string str() const {
        std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
        out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw numeric_error("Raster: cannot open " + path);
        const std::string s = str();
        f.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
};

// FNV-1a, for output digests in manifests.
inline uint64_t fnv1a(const std::string& data) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Flat key=value manifest. Keys are emitted sorted so output is canonical.
struct Manifest {
    std::map<std::string, std::string> kv;

    void set(const std::string& k, const std::string& v) { kv[k] = v; }
    void set_double(const std::string& k, double v) { kv[k] = fmt_double(v); }

    void record_output(const std::string& name, const std::string& bytes) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a(bytes)));
        kv["output." + name + ".fnv64"] = buf;
        kv["output." + name + ".bytes"] = std::to_string(bytes.size());
    }

    std::string str() const {
        std::ostringstream os;
        for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
        return os.str();
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw numeric_error("Manifest: cannot open " + path);
        f << str();
    }
};

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw precondition_error("read_file: cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace escm::io
