#include "fdtof/scene_sim.hpp"

#include "fdtof/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <string_view>
#include <type_traits>
#include <thread>

namespace fdtof {

namespace {

template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(hw, std::max<std::size_t>(1, count / 8));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t first_index = std::numeric_limits<std::size_t>::max();
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < count; i += workers) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        // Keep the lowest failing index so the reported error does not depend on scheduling.
                        if (i < first_index) {
                            first_index = i;
                            first_error = std::current_exception();
                        }
                        return;
                    }
                }
            });
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

double median_of(std::vector<double> values) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (values.size() % 2 == 1) {
        return *mid;
    }
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

bool compatible(const CaptureMode& mode, Estimator estimator) {
    switch (estimator) {
    case Estimator::FourBucket: return std::holds_alternative<PhaseTofMode>(mode);
    case Estimator::InterpPeriodogram:
    case Estimator::QuinnFernandes: return std::holds_alternative<FdTofMode>(mode);
    case Estimator::SlowTof: return std::holds_alternative<SlowTofMode>(mode);
    }
    return false;
}

PrimalSignal synthesize(const ScenePoint& point, const CaptureMode& mode) {
    return std::visit(
        [&](const auto& m) -> PrimalSignal {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, PhaseTofMode>) {
                return synth_phase_correlation(point, m.f_mod, four_bucket_shifts(m.f_mod));
            } else if constexpr (std::is_same_v<M, FdTofMode>) {
                return synth_fd_sweep(point, m.sweep);
            } else {
                return synth_slow_sweep(point, m.sweep, m.exposure);
            }
        },
        mode);
}

struct PixelEstimate {
    double depth = 0.0;
    double amplitude = 0.0;
};

PixelEstimate estimate_pixel(const PrimalSignal& signal, const CaptureMode& mode, Estimator estimator) {
    switch (estimator) {
    case Estimator::FourBucket: {
        const double f_mod = std::get<PhaseTofMode>(mode).f_mod;
        const auto c = signal.samples();
        require(c.size() == 4, "four-bucket estimation needs exactly 4 samples");
        const auto est = phase_to_depth(four_bucket(c[0], c[1], c[2], c[3]), f_mod);
        return {est.depth, est.amplitude};
    }
    case Estimator::InterpPeriodogram: {
        const auto peak = estimate_tone_interp(signal);
        return {peak.depth, peak.amplitude};
    }
    case Estimator::QuinnFernandes: {
        const auto peak = estimate_tone_qf(signal);
        return {peak.depth, peak.amplitude};
    }
    case Estimator::SlowTof: {
        const auto& m = std::get<SlowTofMode>(mode);
        const auto peak = estimate_depth_slow(signal, SlowCaptureConfig(m.exposure, m.sweep));
        return {peak.depth, peak.amplitude};
    }
    }
    fail(ErrorKind::InvalidArgument, "unknown estimator");
}

double percent_error(double estimate, double truth) { return std::abs(estimate - truth) / truth * 100.0; }

} // namespace

SceneSpec::SceneSpec(std::size_t width, std::size_t height, std::vector<ScenePoint> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    require(width_ >= 1 && height_ >= 1, "scene must be at least 1x1");
    require(pixels_.size() == width_ * height_, "scene pixel count does not match its dimensions");
}

SceneSpec SceneSpec::from_depths(std::size_t width, std::size_t height, std::span<const double> depths,
                                 std::span<const double> amplitudes, double ambient) {
    require(depths.size() == width * height && amplitudes.size() == depths.size(),
            "depth/amplitude image size does not match dimensions");
    std::vector<ScenePoint> pixels;
    pixels.reserve(depths.size());
    for (std::size_t i = 0; i < depths.size(); ++i) {
        pixels.push_back(ScenePoint::at_depth(depths[i], amplitudes[i], ambient));
    }
    return SceneSpec(width, height, std::move(pixels));
}

SceneSpec make_procedural_scene(const ProceduralSceneOptions& o) {
    require(o.width >= 1 && o.height >= 1, "scene must be at least 1x1");
    require(o.min_depth > 0.0 && o.max_depth >= o.min_depth, "need 0 < min_depth <= max_depth");
    require(o.multipath_fraction >= 0.0 && o.multipath_fraction <= 1.0, "multipath fraction must be in [0, 1]");

    const double span = o.max_depth - o.min_depth;
    std::vector<ScenePoint> pixels;
    pixels.reserve(o.width * o.height);
    for (std::size_t r = 0; r < o.height; ++r) {
        for (std::size_t c = 0; c < o.width; ++c) {
            const double u = o.width > 1 ? static_cast<double>(c) / static_cast<double>(o.width - 1) : 0.5;
            const double v = o.height > 1 ? static_cast<double>(r) / static_cast<double>(o.height - 1) : 0.5;
            double depth = o.min_depth;
            switch (o.kind) {
            case ProceduralKind::Uniform: depth = o.min_depth; break;
            case ProceduralKind::Ramp: depth = o.min_depth + span * u; break;
            case ProceduralKind::Composite: {
                // Back wall tilted left to right, a floor plane in the lower third,
                // a box on the left and a sphere bulging out of the middle.
                depth = o.max_depth - 0.25 * span * u;
                if (v > 0.7) {
                    depth = std::min(depth, o.max_depth - span * (v - 0.7) / 0.3 * 0.8);
                }
                if (u > 0.1 && u < 0.3 && v > 0.2 && v < 0.6) {
                    depth = std::min(depth, o.min_depth + 0.45 * span);
                }
                const double du = u - 0.62;
                const double dv = v - 0.45;
                const double radius = 0.22;
                const double rr = du * du + dv * dv;
                if (rr < radius * radius) {
                    const double bulge = std::sqrt(radius * radius - rr) / radius;
                    depth = std::min(depth, o.min_depth + 0.6 * span * (1.0 - bulge));
                }
                break;
            }
            }
            depth = std::clamp(depth, o.min_depth, o.max_depth);
            const double amplitude = (o.min_depth / depth) * (o.min_depth / depth);

            std::vector<PathComponent> paths{{amplitude, 2.0 * depth}};
            if (o.multipath_fraction > 0.0) {
                // Deterministic low-discrepancy selection of multipath pixels.
                const double phase = std::fmod(static_cast<double>(r * o.width + c) * 0.6180339887498949, 1.0);
                if (phase < o.multipath_fraction) {
                    paths.push_back({o.multipath_relative_amplitude * amplitude, 2.0 * depth + o.multipath_extra_path});
                }
            }
            pixels.emplace_back(std::move(paths), o.ambient);
        }
    }
    return SceneSpec(o.width, o.height, std::move(pixels));
}

std::string mode_name(const CaptureMode& mode) {
    return std::visit(
        [](const auto& m) -> std::string {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, PhaseTofMode>) {
                return "phase";
            } else if constexpr (std::is_same_v<M, FdTofMode>) {
                return "fd";
            } else {
                return "slow";
            }
        },
        mode);
}

std::string estimator_name(Estimator estimator) {
    switch (estimator) {
    case Estimator::FourBucket: return "four-bucket";
    case Estimator::InterpPeriodogram: return "interp";
    case Estimator::QuinnFernandes: return "qf";
    case Estimator::SlowTof: return "slow";
    }
    return "unknown";
}

Estimator parse_estimator(std::string_view name) {
    for (auto e : {Estimator::FourBucket, Estimator::InterpPeriodogram, Estimator::QuinnFernandes, Estimator::SlowTof}) {
        if (estimator_name(e) == name) {
            return e;
        }
    }
    fail(ErrorKind::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

DepthMap::DepthMap(std::size_t w, std::size_t h)
    : width(w), height(h), depth(w * h, 0.0), amplitude(w * h, 0.0), valid(w * h, 0) {}

DepthMap DepthMap::truth_of(const SceneSpec& scene) {
    DepthMap map(scene.width(), scene.height());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const auto& direct = scene.pixels()[i].paths().front();
        map.depth[i] = 0.5 * direct.path_length;
        map.amplitude[i] = 0.5 * direct.amplitude;
        map.valid[i] = 1;
    }
    return map;
}

std::size_t DepthMap::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    return splitmix64(seed ^ splitmix64((a << 32) | (b & 0xFFFFFFFFull)));
}

SignalCube simulate_capture(const SceneSpec& scene, const CaptureMode& mode, const NoiseSpec& noise) {
    SignalCube cube{scene.width(), scene.height(), mode, {}};
    std::vector<std::optional<PrimalSignal>> slots(scene.size());
    parallel_for(scene.size(), [&](std::size_t i) {
        const std::size_t row = i / scene.width();
        const std::size_t col = i % scene.width();
        try {
            const auto clean = synthesize(scene.pixels()[i], mode);
            slots[i] = add_noise(clean, NoiseSpec{noise.snr_db, derive_seed(noise.seed, row, col)});
        } catch (const Error& e) {
            throw Error(e.kind(), "pixel (" + std::to_string(row) + ", " + std::to_string(col) + "): " + e.what());
        }
    });
    cube.pixels.reserve(slots.size());
    for (auto& s : slots) {
        cube.pixels.push_back(std::move(*s));
    }
    return cube;
}

DepthMap reconstruct(const SignalCube& cube, Estimator estimator) {
    if (!compatible(cube.mode, estimator)) {
        fail(ErrorKind::InvalidArgument,
             "estimator '" + estimator_name(estimator) + "' cannot read a '" + mode_name(cube.mode) + "' capture");
    }
    require(cube.pixels.size() == cube.width * cube.height, "cube pixel count does not match its dimensions");
    DepthMap map(cube.width, cube.height);
    parallel_for(cube.pixels.size(), [&](std::size_t i) {
        try {
            const auto est = estimate_pixel(cube.pixels[i], cube.mode, estimator);
            map.depth[i] = est.depth;
            map.amplitude[i] = est.amplitude;
            map.valid[i] = 1;
        } catch (const Error&) {
            map.valid[i] = 0;
        }
    });
    return map;
}

double psnr(const DepthMap& reconstructed, const DepthMap& truth) {
    require(reconstructed.width == truth.width && reconstructed.height == truth.height,
            "depth maps have different dimensions");
    double peak = 0.0;
    double sse = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!truth.valid[i] || !reconstructed.valid[i]) {
            continue;
        }
        peak = std::max(peak, truth.depth[i]);
        const double e = reconstructed.depth[i] - truth.depth[i];
        sse += e * e;
        ++count;
    }
    if (count == 0) {
        fail(ErrorKind::UndefinedMetric, "no pixel is valid in both maps");
    }
    if (sse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(peak * peak / (sse / static_cast<double>(count)));
}

DepthMap mean_depth_baseline(const DepthMap& truth) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth.valid[i]) {
            sum += truth.depth[i];
            ++count;
        }
    }
    if (count == 0) {
        fail(ErrorKind::UndefinedMetric, "truth map has no valid pixel");
    }
    DepthMap baseline(truth.width, truth.height);
    std::fill(baseline.depth.begin(), baseline.depth.end(), sum / static_cast<double>(count));
    baseline.valid = truth.valid;
    return baseline;
}

DepthErrorStats depth_error_stats(const DepthMap& reconstructed, const DepthMap& truth) {
    require(reconstructed.width == truth.width && reconstructed.height == truth.height,
            "depth maps have different dimensions");
    DepthErrorStats stats;
    stats.histogram_edges = {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0};
    stats.histogram.assign(stats.histogram_edges.size(), 0);

    std::vector<double> errors;
    double sq = 0.0;
    std::size_t within = 0;
    std::size_t considered = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!truth.valid[i]) {
            continue;
        }
        ++considered;
        if (!reconstructed.valid[i]) {
            ++stats.invalid;
            continue;
        }
        const double pct = percent_error(reconstructed.depth[i], truth.depth[i]);
        errors.push_back(pct);
        const double e = reconstructed.depth[i] - truth.depth[i];
        sq += e * e;
        if (pct <= 1.0) {
            ++within;
        }
        const auto bin = std::upper_bound(stats.histogram_edges.begin(), stats.histogram_edges.end(), pct) -
                         stats.histogram_edges.begin() - 1;
        ++stats.histogram[static_cast<std::size_t>(std::max<std::ptrdiff_t>(bin, 0))];
    }
    stats.valid = errors.size();
    if (!errors.empty()) {
        stats.mean_percent = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
        stats.rmse = std::sqrt(sq / static_cast<double>(errors.size()));
        stats.median_percent = median_of(errors);
    }
    stats.fraction_within_1_percent =
        considered == 0 ? 0.0 : static_cast<double>(within) / static_cast<double>(considered);
    return stats;
}

const ExperimentRow& ExperimentReport::row(std::string_view estimator, double snr_db) const {
    for (const auto& r : rows) {
        if (r.estimator == estimator && r.snr_db == snr_db) {
            return r;
        }
    }
    fail(ErrorKind::InvalidArgument, "no report row for " + std::string(estimator));
}

ExperimentReport snr_sweep_experiment(double depth, std::span<const double> snr_levels, std::size_t trials,
                                      const PhaseArmConfig& phase_cfg, const FdArmConfig& fd_cfg,
                                      std::uint64_t seed) {
    require(depth > 0.0, "experiment depth must be > 0");
    require(trials >= 1, "need at least one trial");
    require(!snr_levels.empty(), "need at least one SNR level");
    require(fd_cfg.estimator == Estimator::QuinnFernandes || fd_cfg.estimator == Estimator::InterpPeriodogram,
            "frequency arm must use the qf or interp estimator");

    const auto point = ScenePoint::at_depth(depth);
    const auto fd_clean = synth_fd_sweep(point, fd_cfg.sweep);

    ExperimentReport report;
    report.depth = depth;
    for (std::size_t level = 0; level < snr_levels.size(); ++level) {
        const double snr = snr_levels[level];
        for (int arm = 0; arm < 2; ++arm) {
            std::vector<double> estimates(trials, std::numeric_limits<double>::quiet_NaN());
            parallel_for(trials, [&](std::size_t t) {
                const NoiseSpec noise{snr, derive_seed(seed, 2 * level + static_cast<std::size_t>(arm), t)};
                try {
                    if (arm == 0) {
                        estimates[t] = estimate_depth_phase(point, phase_cfg.f_mod, noise).depth;
                    } else {
                        const auto noisy = add_noise(fd_clean, noise);
                        estimates[t] = fd_cfg.estimator == Estimator::QuinnFernandes
                                           ? estimate_tone_qf(noisy).depth
                                           : estimate_tone_interp(noisy).depth;
                    }
                } catch (const Error&) {
                    // counted as a failure below
                }
            });

            ExperimentRow row;
            row.estimator = arm == 0 ? estimator_name(Estimator::FourBucket) : estimator_name(fd_cfg.estimator);
            row.snr_db = snr;
            row.trials = trials;
            std::vector<double> pct;
            double sq = 0.0;
            double sum = 0.0;
            for (double e : estimates) {
                if (std::isnan(e)) {
                    ++row.failures;
                    pct.push_back(std::numeric_limits<double>::infinity());
                    continue;
                }
                const double p = percent_error(e, depth);
                pct.push_back(p);
                sum += p;
                sq += (e - depth) * (e - depth);
            }
            const std::size_t ok = trials - row.failures;
            row.median_percent = median_of(pct);
            row.mean_percent = ok ? sum / static_cast<double>(ok) : std::numeric_limits<double>::quiet_NaN();
            row.rmse = ok ? std::sqrt(sq / static_cast<double>(ok)) : std::numeric_limits<double>::quiet_NaN();
            report.rows.push_back(row);
        }
    }
    return report;
}

ResolutionReport resolution_experiment(double f_min, double bandwidth, std::size_t n_samples,
                                       const ResolutionOptions& options) {
    require(f_min > 0.0 && bandwidth > 0.0, "sweep must have f_min > 0 and bandwidth > 0");
    require(options.placements >= 1 && options.scan_step > 0.0 && options.scan_stop > options.scan_start,
            "invalid resolution scan");

    ResolutionReport report;
    report.bandwidth = bandwidth;
    report.bound = axial_resolution(bandwidth);

    const double base = options.base_cycles * kSpeedOfLight / bandwidth;
    const double nyquist_delay = static_cast<double>(n_samples - 1) / (2.0 * bandwidth);
    require((base + options.scan_stop * report.bound) / kSpeedOfLight < nyquist_delay,
            "too few sweep samples for the resolution scan (tones would alias)");

    SeparationOptions sep;
    sep.tone.window = Window::Rectangular;
    sep.tone.zero_pad_factor = options.zero_pad_factor;
    sep.min_relative_height = 0.5;

    const auto steps = static_cast<std::size_t>(std::floor((options.scan_stop - options.scan_start) / options.scan_step)) + 1;
    report.scan.resize(steps);
    parallel_for(steps, [&](std::size_t s) {
        const double separation = (options.scan_start + static_cast<double>(s) * options.scan_step) * report.bound;
        const ScenePoint pair({{1.0, base}, {1.0, base + separation}});
        bool resolved = true;
        for (std::size_t m = 0; m < options.placements && resolved; ++m) {
            // Shifting the sweep by c / separation turns the pair's relative phase through a full cycle.
            const double offset = static_cast<double>(m) / static_cast<double>(options.placements) *
                                  kSpeedOfLight / separation;
            const FrequencySweep sweep(f_min + offset, f_min + offset + bandwidth, n_samples);
            resolved = separate_multipath(synth_fd_sweep(pair, sweep), 2, sep).size() == 2;
        }
        report.scan[s] = {separation, resolved};
    });

    report.empirical_threshold = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t s = steps; s-- > 0;) {
        if (!report.scan[s].second) {
            break;
        }
        report.empirical_threshold = report.scan[s].first;
    }
    report.ratio = report.empirical_threshold / report.bound;
    return report;
}

} // namespace fdtof
