#pragma once

#include "fdtof/scene_sim.hpp"
#include "fdtof/signal_model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fdtof::io {

/// Writes `content` to a sibling temp file and renames it over `path`, so a
/// reader never sees a half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// 16-bit binary PGM ("P5", maxval 65535, big-endian samples).
struct Pgm16 {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint16_t> levels;
    std::vector<std::string> comments; ///< without the leading '#'
};

/// Sentinel level written for invalid pixels.
inline constexpr std::uint16_t kInvalidLevel = 65535;

std::string encode_pgm(const Pgm16& image);
/// Parse errors name the byte offset of the offending token.
Pgm16 decode_pgm(std::string_view bytes);

/// Quantizes to `scale` units per level (depth: 0.001 m). Invalid pixels get
/// kInvalidLevel; a valid value that does not fit below it is an error.
Pgm16 map_to_pgm(std::span<const double> values, std::span<const std::uint8_t> valid, std::size_t width,
                 std::size_t height, double scale, std::string_view unit);
/// Reads the scale back from the "scale=" comment (defaults to 0.001 if absent).
DepthMap depth_map_from_pgm(const Pgm16& image);
Pgm16 depth_map_to_pgm(const DepthMap& map);
/// Amplitude map scaled so the largest valid amplitude lands near full range.
Pgm16 amplitude_map_to_pgm(const DepthMap& map);

// Primal-signal CSV: coordinate column ("tau_s" or "frequency_hz"), "sample",
// "object_id". Rows of one object are contiguous and in coordinate order.
struct LabeledSignal {
    std::int64_t object_id = 0;
    PrimalSignal signal;
};

std::string encode_signal_csv(const std::vector<LabeledSignal>& signals);
/// Parse errors name the line and column.
std::vector<LabeledSignal> decode_signal_csv(std::string_view text);

/// Scene description as JSON. Three shapes are accepted:
///   {"procedural": {"kind": "composite"|"ramp"|"uniform", "width", "height",
///                   "min_depth_m", "max_depth_m", "ambient", "multipath_fraction",
///                   "multipath_relative_amplitude", "multipath_extra_path_m"}}
///   {"width", "height", "depth_m": [...], "amplitude": [...]?, "ambient"?}
///   {"width", "height", "pixels": [{"paths": [{"amplitude", "path_length_m"}], "ambient"?}]}
/// Errors name the offending field.
SceneSpec decode_scene_json(std::string_view text);
ProceduralKind parse_procedural_kind(std::string_view name);
std::string procedural_kind_name(ProceduralKind kind);

/// Formats a double so that parsing it back yields the same value.
std::string format_double(double value);

} // namespace fdtof::io
