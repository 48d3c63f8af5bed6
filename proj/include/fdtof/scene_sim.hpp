#pragma once

#include "fdtof/freq_domain.hpp"
#include "fdtof/phase_tof.hpp"
#include "fdtof/signal_model.hpp"
#include "fdtof/slow_tof.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fdtof {

/// Per-pixel scene description, row-major.
class SceneSpec {
public:
    SceneSpec(std::size_t width, std::size_t height, std::vector<ScenePoint> pixels);

    /// Single-return scene from a depth image (meters) with matching amplitudes.
    static SceneSpec from_depths(std::size_t width, std::size_t height, std::span<const double> depths,
                                 std::span<const double> amplitudes, double ambient = 0.0);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    const ScenePoint& at(std::size_t row, std::size_t col) const { return pixels_.at(row * width_ + col); }
    const std::vector<ScenePoint>& pixels() const noexcept { return pixels_; }

private:
    std::size_t width_;
    std::size_t height_;
    std::vector<ScenePoint> pixels_;
};

enum class ProceduralKind { Uniform, Ramp, Composite };

struct ProceduralSceneOptions {
    ProceduralKind kind = ProceduralKind::Composite;
    std::size_t width = 64;
    std::size_t height = 64;
    double min_depth = 0.5; ///< meters
    double max_depth = 3.0; ///< meters
    double ambient = 0.0;
    /// Fraction of pixels (deterministic checkerboard-like pattern) given a second, longer return.
    double multipath_fraction = 0.0;
    double multipath_relative_amplitude = 0.3;
    double multipath_extra_path = 1.0; ///< meters added to the direct path length
};

/// Planes, a sphere and a depth ramp (Composite), a plain ramp, or a uniform wall.
SceneSpec make_procedural_scene(const ProceduralSceneOptions& options);

struct PhaseTofMode {
    double f_mod;
};
struct FdTofMode {
    FrequencySweep sweep;
};
struct SlowTofMode {
    FrequencySweep sweep;
    double exposure;
};
using CaptureMode = std::variant<PhaseTofMode, FdTofMode, SlowTofMode>;

std::string mode_name(const CaptureMode& mode);

/// Simulated raw measurements for every pixel.
struct SignalCube {
    std::size_t width = 0;
    std::size_t height = 0;
    CaptureMode mode;
    std::vector<PrimalSignal> pixels;
};

enum class Estimator { FourBucket, InterpPeriodogram, QuinnFernandes, SlowTof };

std::string estimator_name(Estimator estimator);
Estimator parse_estimator(std::string_view name);

/// Recovered depth and amplitude per pixel. Pixels whose estimator failed
/// are marked invalid and keep depth 0; callers must consult `valid`.
struct DepthMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> depth;
    std::vector<double> amplitude;
    std::vector<std::uint8_t> valid;

    DepthMap() = default;
    DepthMap(std::size_t w, std::size_t h);

    /// Ground truth: the shortest (direct) return of every pixel.
    static DepthMap truth_of(const SceneSpec& scene);

    std::size_t size() const noexcept { return depth.size(); }
    std::size_t valid_count() const noexcept;
};

/// Deterministic 64-bit seed for stream (a, b) under a global seed:
/// splitmix64(seed XOR splitmix64((a << 32) | b)). Injective in (a, b) for a, b < 2^32.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Per-pixel noise uses derive_seed(noise.seed, row, col).
SignalCube simulate_capture(const SceneSpec& scene, const CaptureMode& mode, const NoiseSpec& noise);

DepthMap reconstruct(const SignalCube& cube, Estimator estimator);

/// 10 log10(peak^2 / MSE) over pixels valid in both maps, peak = max truth depth.
/// Returns +inf for identical maps.
double psnr(const DepthMap& reconstructed, const DepthMap& truth);

/// Constant map at the mean valid truth depth; the "no information" reference.
DepthMap mean_depth_baseline(const DepthMap& truth);

struct DepthErrorStats {
    std::size_t valid = 0;
    std::size_t invalid = 0;
    double median_percent = 0.0;
    double mean_percent = 0.0;
    double rmse = 0.0; ///< meters
    double fraction_within_1_percent = 0.0; ///< of all pixels, invalid counted as failures
    std::vector<double> histogram_edges; ///< percent error bin edges
    std::vector<std::size_t> histogram;  ///< counts, one per [edge_i, edge_i+1), last bin open
};

/// Percent error |d_hat - d| / d * 100 per pixel.
DepthErrorStats depth_error_stats(const DepthMap& reconstructed, const DepthMap& truth);

struct PhaseArmConfig {
    double f_mod = 50e6;
};

struct FdArmConfig {
    FrequencySweep sweep{10e6, 1e9, 256};
    Estimator estimator = Estimator::QuinnFernandes;
};

struct ExperimentRow {
    std::string estimator;
    double snr_db = 0.0;
    std::size_t trials = 0;
    std::size_t failures = 0;
    double median_percent = 0.0; ///< failures count as +inf
    double mean_percent = 0.0;   ///< successful trials only
    double rmse = 0.0;           ///< meters, successful trials only
};

struct ExperimentReport {
    double depth = 0.0;
    std::vector<ExperimentRow> rows;

    const ExperimentRow& row(std::string_view estimator, double snr_db) const;
};

/// Monte Carlo comparison of the phase arm (four-bucket) and the frequency
/// arm on a single return at `depth`. Trial t at level i of arm a draws its
/// noise from derive_seed(seed, 2 i + a, t).
ExperimentReport snr_sweep_experiment(double depth, std::span<const double> snr_levels, std::size_t trials,
                                      const PhaseArmConfig& phase_cfg, const FdArmConfig& fd_cfg,
                                      std::uint64_t seed);

struct ResolutionOptions {
    std::size_t placements = 16;
    double scan_start = 0.25; ///< in units of the axial-resolution bound
    double scan_stop = 2.0;
    double scan_step = 0.01;
    double base_cycles = 10.0;
    std::size_t zero_pad_factor = 16;
};

struct ResolutionReport {
    double bandwidth = 0.0;
    double bound = 0.0;                ///< axial_resolution, meters of path length
    double empirical_threshold = 0.0;  ///< meters of path length
    double ratio = 0.0;                ///< empirical / bound
    std::vector<std::pair<double, bool>> scan; ///< (separation m, resolved at every placement)
};

/// Finds the smallest path separation above which two equal returns are always
/// seen as two peaks (rectangular window, half-maximum floor), taking the worst
/// case over the relative phase of the pair.
ResolutionReport resolution_experiment(double f_min, double bandwidth, std::size_t n_samples,
                                       const ResolutionOptions& options = {});

} // namespace fdtof
