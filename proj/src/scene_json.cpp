#include "fdtof/error.hpp"
#include "fdtof/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace fdtof::io {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    fail(ErrorKind::Parse, "scene JSON field '" + field + "': " + what);
}

template <typename T>
T read(const json& obj, const std::string& key, const std::string& path) {
    const std::string field = path.empty() ? key : path + "." + key;
    if (!obj.contains(key)) {
        field_error(field, "missing");
    }
    if constexpr (std::is_unsigned_v<T>) {
        if (!obj.at(key).is_number_unsigned()) {
            field_error(field, "expected a non-negative integer");
        }
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        field_error(field, e.what());
    }
}

template <typename T>
T read_or(const json& obj, const std::string& key, const std::string& path, T fallback) {
    return obj.contains(key) ? read<T>(obj, key, path) : fallback;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& path) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
            field_error(path.empty() ? key : path + "." + key, "unknown field");
        }
    }
}

} // namespace

std::string procedural_kind_name(ProceduralKind kind) {
    switch (kind) {
    case ProceduralKind::Uniform: return "uniform";
    case ProceduralKind::Ramp: return "ramp";
    case ProceduralKind::Composite: return "composite";
    }
    return "unknown";
}

ProceduralKind parse_procedural_kind(std::string_view name) {
    for (auto k : {ProceduralKind::Uniform, ProceduralKind::Ramp, ProceduralKind::Composite}) {
        if (procedural_kind_name(k) == name) {
            return k;
        }
    }
    fail(ErrorKind::InvalidArgument, "unknown scene kind '" + std::string(name) + "'");
}

SceneSpec decode_scene_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Parse, "scene JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!doc.is_object()) {
        field_error("(root)", "expected an object");
    }

    try {
        if (doc.contains("procedural")) {
            reject_unknown(doc, {"procedural"}, "");
            const json& p = doc.at("procedural");
            if (!p.is_object()) {
                field_error("procedural", "expected an object");
            }
            reject_unknown(p,
                           {"kind", "width", "height", "min_depth_m", "max_depth_m", "ambient", "multipath_fraction",
                            "multipath_relative_amplitude", "multipath_extra_path_m"},
                           "procedural");
            ProceduralSceneOptions o;
            if (p.contains("kind")) {
                try {
                    o.kind = parse_procedural_kind(read<std::string>(p, "kind", "procedural"));
                } catch (const Error& e) {
                    field_error("procedural.kind", e.what());
                }
            }
            o.width = read_or<std::size_t>(p, "width", "procedural", o.width);
            o.height = read_or<std::size_t>(p, "height", "procedural", o.height);
            o.min_depth = read_or<double>(p, "min_depth_m", "procedural", o.min_depth);
            o.max_depth = read_or<double>(p, "max_depth_m", "procedural", o.max_depth);
            o.ambient = read_or<double>(p, "ambient", "procedural", o.ambient);
            o.multipath_fraction = read_or<double>(p, "multipath_fraction", "procedural", o.multipath_fraction);
            o.multipath_relative_amplitude =
                read_or<double>(p, "multipath_relative_amplitude", "procedural", o.multipath_relative_amplitude);
            o.multipath_extra_path = read_or<double>(p, "multipath_extra_path_m", "procedural", o.multipath_extra_path);
            return make_procedural_scene(o);
        }

        const auto width = read<std::size_t>(doc, "width", "");
        const auto height = read<std::size_t>(doc, "height", "");
        const double ambient = read_or<double>(doc, "ambient", "", 0.0);

        if (doc.contains("pixels")) {
            reject_unknown(doc, {"width", "height", "ambient", "pixels"}, "");
            const json& pixels = doc.at("pixels");
            if (!pixels.is_array() || pixels.size() != width * height) {
                field_error("pixels", "expected an array of width*height entries");
            }
            std::vector<ScenePoint> points;
            points.reserve(pixels.size());
            for (std::size_t i = 0; i < pixels.size(); ++i) {
                const std::string at = "pixels[" + std::to_string(i) + "]";
                const json& px = pixels[i];
                if (!px.is_object()) {
                    field_error(at, "expected an object");
                }
                reject_unknown(px, {"paths", "ambient"}, at);
                const json& paths = px.contains("paths") ? px.at("paths") : json();
                if (!paths.is_array() || paths.empty()) {
                    field_error(at + ".paths", "expected a non-empty array");
                }
                std::vector<PathComponent> comps;
                for (std::size_t k = 0; k < paths.size(); ++k) {
                    const std::string pk = at + ".paths[" + std::to_string(k) + "]";
                    if (!paths[k].is_object()) {
                        field_error(pk, "expected an object");
                    }
                    reject_unknown(paths[k], {"amplitude", "path_length_m"}, pk);
                    comps.push_back({read<double>(paths[k], "amplitude", pk), read<double>(paths[k], "path_length_m", pk)});
                }
                try {
                    points.emplace_back(std::move(comps), read_or<double>(px, "ambient", at, ambient));
                } catch (const Error& e) {
                    if (e.kind() == ErrorKind::Parse) {
                        throw;
                    }
                    field_error(at, e.what());
                }
            }
            return SceneSpec(width, height, std::move(points));
        }

        reject_unknown(doc, {"width", "height", "ambient", "depth_m", "amplitude"}, "");
        const auto depths = read<std::vector<double>>(doc, "depth_m", "");
        if (depths.size() != width * height) {
            field_error("depth_m", "expected width*height = " + std::to_string(width * height) + " values, got " +
                                       std::to_string(depths.size()));
        }
        std::vector<double> amps(depths.size(), 1.0);
        if (doc.contains("amplitude")) {
            amps = read<std::vector<double>>(doc, "amplitude", "");
            if (amps.size() != depths.size()) {
                field_error("amplitude", "expected as many values as depth_m");
            }
        }
        for (std::size_t i = 0; i < depths.size(); ++i) {
            if (!(depths[i] > 0.0) || !std::isfinite(depths[i])) {
                field_error("depth_m[" + std::to_string(i) + "]", "depth must be finite and > 0");
            }
        }
        return SceneSpec::from_depths(width, height, depths, amps, ambient);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Parse) {
            throw;
        }
        fail(ErrorKind::Parse, std::string("scene JSON: ") + e.what());
    }
}

} // namespace fdtof::io
