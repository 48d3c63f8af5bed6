#include "fdtof/io.hpp"

#include "fdtof/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

namespace fdtof::io {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view content) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    // Unique enough within one process tree; the rename is what gives atomicity.
    std::random_device rd;
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorKind::Io, "cannot write " + path.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp, ec);
            fail(ErrorKind::Io, "short write to " + tmp.string());
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorKind::Io, "cannot rename into " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string encode_pgm(const Pgm16& image) {
    require(image.levels.size() == image.width * image.height, "PGM level count does not match dimensions");
    std::string out = "P5\n";
    for (const auto& c : image.comments) {
        out += "#" + c + "\n";
    }
    out += std::to_string(image.width) + " " + std::to_string(image.height) + "\n65535\n";
    out.reserve(out.size() + 2 * image.levels.size());
    for (std::uint16_t v : image.levels) {
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xFF));
    }
    return out;
}

namespace {

[[noreturn]] void pgm_error(std::size_t offset, const std::string& what) {
    fail(ErrorKind::Parse, "PGM parse error at byte " + std::to_string(offset) + ": " + what);
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

struct PgmCursor {
    std::string_view bytes;
    std::size_t pos = 0;
    std::vector<std::string>* comments = nullptr;

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            if (is_space(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                const std::size_t end = bytes.find('\n', pos);
                const std::size_t stop = end == std::string_view::npos ? bytes.size() : end;
                comments->emplace_back(bytes.substr(pos + 1, stop - pos - 1));
                pos = stop;
            } else {
                break;
            }
        }
    }

    std::uint64_t number(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos;
        std::uint64_t value = 0;
        const auto res = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), value);
        if (res.ec != std::errc() || res.ptr == bytes.data() + start) {
            pgm_error(start, std::string("expected ") + what);
        }
        pos = static_cast<std::size_t>(res.ptr - bytes.data());
        if (pos < bytes.size() && !is_space(bytes[pos]) && bytes[pos] != '#') {
            pgm_error(pos, std::string("unexpected character after ") + what);
        }
        return value;
    }
};

} // namespace

Pgm16 decode_pgm(std::string_view bytes) {
    Pgm16 image;
    if (bytes.size() < 2 || bytes.substr(0, 2) != "P5") {
        pgm_error(0, "missing P5 magic");
    }
    PgmCursor cur{bytes, 2, &image.comments};
    const auto width = cur.number("width");
    const auto height = cur.number("height");
    const std::size_t maxval_at = cur.pos;
    const auto maxval = cur.number("maxval");
    if (width == 0 || height == 0) {
        pgm_error(maxval_at, "zero image dimension");
    }
    if (maxval != 65535) {
        pgm_error(maxval_at, "maxval must be 65535 for a 16-bit depth map, got " + std::to_string(maxval));
    }
    if (cur.pos >= bytes.size() || !is_space(bytes[cur.pos])) {
        pgm_error(cur.pos, "missing whitespace before raster");
    }
    ++cur.pos;
    const std::size_t expected = 2 * width * height;
    if (bytes.size() - cur.pos < expected) {
        pgm_error(bytes.size(), "raster truncated: need " + std::to_string(expected) + " bytes, have " +
                                    std::to_string(bytes.size() - cur.pos));
    }
    if (bytes.size() - cur.pos > expected) {
        pgm_error(cur.pos + expected, "trailing bytes after raster");
    }
    image.width = width;
    image.height = height;
    image.levels.resize(width * height);
    for (std::size_t i = 0; i < image.levels.size(); ++i) {
        const auto hi = static_cast<unsigned char>(bytes[cur.pos + 2 * i]);
        const auto lo = static_cast<unsigned char>(bytes[cur.pos + 2 * i + 1]);
        image.levels[i] = static_cast<std::uint16_t>((hi << 8) | lo);
    }
    return image;
}

Pgm16 map_to_pgm(std::span<const double> values, std::span<const std::uint8_t> valid, std::size_t width,
                 std::size_t height, double scale, std::string_view unit) {
    require(values.size() == width * height && valid.size() == values.size(), "map size does not match dimensions");
    require(scale > 0.0 && std::isfinite(scale), "PGM scale must be positive");
    Pgm16 image;
    image.width = width;
    image.height = height;
    image.comments = {" fdtof scale=" + format_double(scale) + " unit=" + std::string(unit) + " offset=0 invalid=65535"};
    image.levels.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!valid[i]) {
            image.levels[i] = kInvalidLevel;
            continue;
        }
        const double level = std::round(values[i] / scale);
        if (!std::isfinite(level) || level < 0.0 || level >= kInvalidLevel) {
            fail(ErrorKind::InvalidArgument, "value " + format_double(values[i]) + " at pixel " + std::to_string(i) +
                                                 " does not fit a 16-bit PGM at scale " + format_double(scale));
        }
        image.levels[i] = static_cast<std::uint16_t>(level);
    }
    return image;
}

Pgm16 depth_map_to_pgm(const DepthMap& map) {
    return map_to_pgm(map.depth, map.valid, map.width, map.height, 0.001, "m");
}

Pgm16 amplitude_map_to_pgm(const DepthMap& map) {
    double peak = 0.0;
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (map.valid[i] && std::isfinite(map.amplitude[i])) {
            peak = std::max(peak, std::abs(map.amplitude[i]));
        }
    }
    const double scale = peak > 0.0 ? peak / 65000.0 : 1.0;
    std::vector<double> magnitude(map.amplitude.size());
    std::transform(map.amplitude.begin(), map.amplitude.end(), magnitude.begin(), [](double a) { return std::abs(a); });
    return map_to_pgm(magnitude, map.valid, map.width, map.height, scale, "amplitude");
}

DepthMap depth_map_from_pgm(const Pgm16& image) {
    double scale = 0.001;
    for (const auto& c : image.comments) {
        const auto at = c.find("scale=");
        if (at == std::string::npos) {
            continue;
        }
        const char* begin = c.data() + at + 6;
        const auto res = std::from_chars(begin, c.data() + c.size(), scale);
        if (res.ec != std::errc() || !(scale > 0.0)) {
            fail(ErrorKind::Parse, "PGM comment has an unreadable scale: '" + c + "'");
        }
    }
    DepthMap map(image.width, image.height);
    for (std::size_t i = 0; i < image.levels.size(); ++i) {
        if (image.levels[i] == kInvalidLevel) {
            continue;
        }
        map.depth[i] = image.levels[i] * scale;
        map.amplitude[i] = 1.0;
        map.valid[i] = 1;
    }
    return map;
}

std::string encode_signal_csv(const std::vector<LabeledSignal>& signals) {
    require(!signals.empty(), "no signals to write");
    const PrimalDomain domain = signals.front().signal.domain();
    std::string out = domain == PrimalDomain::PhaseShift ? "tau_s" : "frequency_hz";
    out += ",sample,object_id\n";
    for (const auto& s : signals) {
        require(s.signal.domain() == domain, "all signals in one CSV must share a primal domain");
        const auto x = s.signal.coordinates();
        const auto y = s.signal.samples();
        for (std::size_t i = 0; i < y.size(); ++i) {
            out += format_double(x[i]);
            out += ',';
            out += format_double(y[i]);
            out += ',';
            out += std::to_string(s.object_id);
            out += '\n';
        }
    }
    return out;
}

namespace {

[[noreturn]] void csv_error(std::size_t line, std::size_t column, const std::string& what) {
    fail(ErrorKind::Parse, "CSV parse error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                               ": " + what);
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, std::size_t column) {
    T value{};
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        csv_error(line, column, "cannot parse '" + std::string(field) + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

} // namespace

std::vector<LabeledSignal> decode_signal_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        start = end + 1;
    }
    if (lines.empty()) {
        csv_error(1, 1, "empty file");
    }
    const auto header = split(lines[0]);
    if (header.size() != 3 || header[1] != "sample" || header[2] != "object_id") {
        csv_error(1, 1, "header must be '<tau_s|frequency_hz>,sample,object_id'");
    }
    PrimalDomain domain;
    if (header[0] == "tau_s") {
        domain = PrimalDomain::PhaseShift;
    } else if (header[0] == "frequency_hz") {
        domain = PrimalDomain::ModulationFrequency;
    } else {
        csv_error(1, 1, "unknown coordinate column '" + std::string(header[0]) + "'");
    }

    struct Pending {
        std::int64_t id;
        std::vector<double> x, y;
        std::size_t first_line;
    };
    std::vector<Pending> groups;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        const std::size_t line_no = n + 1;
        if (lines[n].empty()) {
            continue;
        }
        const auto fields = split(lines[n]);
        if (fields.size() != 3) {
            csv_error(line_no, 1, "expected 3 fields, found " + std::to_string(fields.size()));
        }
        const double x = parse_field<double>(fields[0], line_no, 1);
        const double y = parse_field<double>(fields[1], line_no, 2);
        const auto id = parse_field<std::int64_t>(fields[2], line_no, 3);
        if (groups.empty() || groups.back().id != id) {
            for (const auto& g : groups) {
                if (g.id == id) {
                    csv_error(line_no, 3, "rows of object " + std::to_string(id) + " are not contiguous");
                }
            }
            groups.push_back({id, {}, {}, line_no});
        }
        groups.back().x.push_back(x);
        groups.back().y.push_back(y);
    }
    if (groups.empty()) {
        csv_error(2, 1, "no data rows");
    }
    std::vector<LabeledSignal> out;
    for (auto& g : groups) {
        try {
            out.push_back({g.id, PrimalSignal(domain, std::move(g.x), std::move(g.y))});
        } catch (const Error& e) {
            csv_error(g.first_line, 1, "object " + std::to_string(g.id) + ": " + e.what());
        }
    }
    return out;
}

} // namespace fdtof::io
