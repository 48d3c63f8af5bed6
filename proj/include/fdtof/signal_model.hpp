#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace fdtof {

/// Speed of light in vacuum, m/s.
inline constexpr double kSpeedOfLight = 299792458.0;

// Frequency convention: every modulation frequency in this library is an
// ordinary frequency in Hz and all 2*pi factors are written out. A path of
// round-trip length z therefore oscillates along the f_M axis as
// cos(2*pi * (z/c) * f_M); its "delay" z/c is the tone frequency in the
// dual domain, in seconds.

/// One optical return: attenuation and round-trip path length (meters).
struct PathComponent {
    double amplitude = 1.0;
    double path_length = 0.0;

    double delay() const noexcept { return path_length / kSpeedOfLight; }
};

/// All returns reaching one pixel plus the ambient level. Paths are kept
/// sorted ascending by path length.
class ScenePoint {
public:
    ScenePoint(std::vector<PathComponent> paths, double ambient = 0.0);

    /// Single return from an object at `depth` meters (path length 2*depth).
    static ScenePoint at_depth(double depth, double amplitude = 1.0, double ambient = 0.0);

    const std::vector<PathComponent>& paths() const noexcept { return paths_; }
    double ambient() const noexcept { return ambient_; }

private:
    std::vector<PathComponent> paths_;
    double ambient_;
};

/// Uniform grid of modulation frequencies, endpoints inclusive.
class FrequencySweep {
public:
    FrequencySweep(double f_min, double f_max, std::size_t n_samples);

    double f_min() const noexcept { return f_min_; }
    double f_max() const noexcept { return f_max_; }
    std::size_t size() const noexcept { return n_; }
    double spacing() const noexcept { return (f_max_ - f_min_) / static_cast<double>(n_ - 1); }
    double bandwidth() const noexcept { return f_max_ - f_min_; }
    double frequency(std::size_t i) const noexcept;
    std::vector<double> frequencies() const;

    bool operator==(const FrequencySweep&) const = default;

private:
    double f_min_;
    double f_max_;
    std::size_t n_;
};

enum class PrimalDomain { PhaseShift, ModulationFrequency };

/// Real samples indexed by the primal-domain coordinate (seconds of phase
/// shift tau, or Hz of modulation frequency).
class PrimalSignal {
public:
    PrimalSignal(PrimalDomain domain, std::vector<double> coordinates, std::vector<double> samples);

    PrimalDomain domain() const noexcept { return domain_; }
    std::span<const double> coordinates() const noexcept { return coordinates_; }
    std::span<const double> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }

    /// Mean coordinate step; meaningful for uniformly spaced signals.
    double spacing() const;
    /// True if every step is within `rel_tol` of the mean step.
    bool is_uniform(double rel_tol = 1e-6) const;

    PrimalSignal with_samples(std::vector<double> samples) const;

    bool operator==(const PrimalSignal&) const = default;

private:
    PrimalDomain domain_;
    std::vector<double> coordinates_;
    std::vector<double> samples_;
};

/// Additive white Gaussian noise at a target SNR. snr_db = +inf disables it.
struct NoiseSpec {
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;

    static NoiseSpec noiseless() noexcept { return {}; }
    bool is_noiseless() const noexcept;
};

/// Cross-correlation samples c(tau) of the phase architecture:
/// 0.5 * sum_l a_l cos(2 pi f_mod tau + phi_l) + ambient, phi_l = 2 pi z_l f_mod / c.
PrimalSignal synth_phase_correlation(const ScenePoint& point, double f_mod, std::span<const double> taus);

/// The four quarter-period shifts tau = k / (4 f_mod), k = 0..3.
std::vector<double> four_bucket_shifts(double f_mod);

/// Frequency-domain sweep at zero shift: 0.5 * sum_l a_l cos(2 pi z_l f / c) + ambient.
PrimalSignal synth_fd_sweep(const ScenePoint& point, const FrequencySweep& sweep);

/// Integrating (slow) camera swept over f_M with exposure t_E:
/// sum_l a_l / (2 pi f) [sin(2 pi f (t_E + z_l/c)) - sin(2 pi f z_l / c)] + ambient * t_E.
PrimalSignal synth_slow_sweep(const ScenePoint& point, const FrequencySweep& sweep, double exposure);

/// Adds i.i.d. Gaussian noise with variance P_AC / 10^(snr_db/10), P_AC the
/// population variance of the noiseless samples. Pure function of its inputs.
PrimalSignal add_noise(const PrimalSignal& signal, const NoiseSpec& noise);

} // namespace fdtof
