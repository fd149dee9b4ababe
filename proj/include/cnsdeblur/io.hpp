#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "image.hpp"
#include "report.hpp"

namespace cnsdeblur {

namespace detail {

inline void skip_pnm_space(std::istream& is) {
    for (;;) {
        const int c = is.peek();
        if (c == '#') {
            std::string dummy;
            std::getline(is, dummy);
        } else if (c != EOF && std::isspace(c)) {
            is.get();
        } else {
            return;
        }
    }
}

inline long read_pnm_int(std::istream& is, const std::string& path) {
    skip_pnm_space(is);
    long v = -1;
    if (!(is >> v) || v < 0) throw InputError(path + ": malformed PNM header");
    return v;
}

} // namespace detail

enum class ColorMode { luminance, red, green, blue };

// Reads P2/P5 (gray) and P3/P6 (color). Values are mapped to [0,1]; color is reduced per `mode`.
inline ImageGrid read_image_stream(std::istream& is, const std::string& path = "<stream>",
                                   ColorMode mode = ColorMode::luminance) {
    char magic[2] = {0, 0};
    if (!is.read(magic, 2) || magic[0] != 'P') throw InputError(path + ": not a PNM file");
    const char t = magic[1];
    if (t != '2' && t != '3' && t != '5' && t != '6')
        throw InputError(path + ": unsupported PNM type P" + std::string(1, t));
    const long w = detail::read_pnm_int(is, path), h = detail::read_pnm_int(is, path),
               maxv = detail::read_pnm_int(is, path);
    if (w < 1 || h < 1 || maxv < 1 || maxv > 65535) throw InputError(path + ": invalid PNM dimensions or maxval");
    const bool color = t == '3' || t == '6';
    const bool binary = t == '5' || t == '6';
    const int ch = color ? 3 : 1;
    const std::size_t count = static_cast<std::size_t>(w) * h * ch;
    std::vector<double> raw(count);
    if (binary) {
        is.get(); // single whitespace after maxval
        const int bytes = maxv > 255 ? 2 : 1;
        std::vector<unsigned char> buf(count * bytes);
        if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
            throw InputError(path + ": truncated pixel data");
        for (std::size_t i = 0; i < count; ++i)
            raw[i] = bytes == 2 ? buf[2 * i] * 256.0 + buf[2 * i + 1] : buf[i];
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            detail::skip_pnm_space(is);
            long v;
            if (!(is >> v) || v < 0 || v > maxv) throw InputError(path + ": malformed pixel data");
            raw[i] = static_cast<double>(v);
        }
    }
    ImageGrid img(static_cast<int>(h), static_cast<int>(w));
    const double scale = 1.0 / static_cast<double>(maxv);
    for (std::size_t p = 0; p < img.size(); ++p) {
        if (!color) {
            img.data[p] = raw[p] * scale;
            continue;
        }
        const double r = raw[3 * p] * scale, g = raw[3 * p + 1] * scale, b = raw[3 * p + 2] * scale;
        switch (mode) {
        case ColorMode::luminance: img.data[p] = 0.299 * r + 0.587 * g + 0.114 * b; break;
        case ColorMode::red: img.data[p] = r; break;
        case ColorMode::green: img.data[p] = g; break;
        case ColorMode::blue: img.data[p] = b; break;
        }
    }
    return img;
}

inline ImageGrid read_image(const std::string& path, ColorMode mode = ColorMode::luminance) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError(path + ": cannot open");
    return read_image_stream(f, path, mode);
}

// Clamp to [0,1], scale to 8 bits, round half to even.
inline unsigned char to_byte(double v) {
    const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0) * 255.0;
    return static_cast<unsigned char>(std::nearbyint(c));
}

inline void write_pgm_stream(std::ostream& os, const ImageGrid& img, bool binary = true) {
    os << (binary ? "P5" : "P2") << '\n' << img.cols << ' ' << img.rows << "\n255\n";
    if (binary) {
        std::vector<unsigned char> buf(img.size());
        for (std::size_t i = 0; i < img.size(); ++i) buf[i] = to_byte(img.data[i]);
        os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    } else {
        for (int i = 0; i < img.rows; ++i) {
            for (int k = 0; k < img.cols; ++k) os << (k ? " " : "") << static_cast<int>(to_byte(img(i, k)));
            os << '\n';
        }
    }
}

inline void write_pgm(const std::string& path, const ImageGrid& img, bool binary = true) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError(path + ": cannot open for writing");
    write_pgm_stream(f, img, binary);
    if (!f) throw InputError(path + ": write failed");
}

inline void write_kernel_stream(std::ostream& os, const Kernel& k) {
    os << k.rows << ' ' << k.cols << '\n' << std::setprecision(17);
    for (int i = 0; i < k.rows; ++i) {
        for (int j = 0; j < k.cols; ++j) os << (j ? " " : "") << k(i, j);
        os << '\n';
    }
}

inline Kernel read_kernel_stream(std::istream& is, const std::string& path = "<stream>") {
    long l = 0, m = 0;
    if (!(is >> l >> m) || l < 1 || m < 1 || l > 4096 || m > 4096) throw InputError(path + ": malformed kernel header");
    Kernel k(static_cast<int>(l), static_cast<int>(m));
    for (double& v : k.data)
        if (!(is >> v) || !std::isfinite(v)) throw InputError(path + ": malformed kernel taps");
    check_kernel(k);
    return k;
}

inline void write_kernel(const std::string& path, const Kernel& k) {
    std::ofstream f(path);
    if (!f) throw InputError(path + ": cannot open for writing");
    write_kernel_stream(f, k);
}

inline Kernel read_kernel(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError(path + ": cannot open");
    return read_kernel_stream(f, path);
}

inline void write_report_stream(std::ostream& os, const RunReport& r) {
    os << "# " << (r.method.empty() ? "run" : r.method) << " k residual lambda\n" << std::setprecision(17);
    for (std::size_t k = 0; k < r.residual_trace.size(); ++k)
        os << k << ' ' << r.residual_trace[k] << ' ' << (k < r.lambda_trace.size() ? r.lambda_trace[k] : 0.0) << '\n';
    os << "stop_reason " << to_string(r.stop_reason) << '\n';
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// `key = value` lines; `#` starts a comment.
inline std::map<std::string, std::string> parse_config_stream(std::istream& is, const std::string& path = "<stream>") {
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) throw InputError(path + ":" + std::to_string(lineno) + ": empty key");
        out[key] = value;
    }
    return out;
}

inline std::map<std::string, std::string> parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError(path + ": cannot open config");
    return parse_config_stream(f, path);
}

} // namespace cnsdeblur
