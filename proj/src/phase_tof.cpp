#include "fdtof/phase_tof.hpp"

#include "fdtof/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fdtof {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double confidence_for(double amplitude, const PhaseTofOptions& options) {
    if (!(options.reference_amplitude > 0.0)) {
        return amplitude > 0.0 ? 1.0 : 0.0;
    }
    return std::clamp(amplitude / options.reference_amplitude, 0.0, 1.0);
}

} // namespace

double wrap_phase(double phase) noexcept {
    double wrapped = std::fmod(phase, kTwoPi);
    if (wrapped < 0.0) {
        wrapped += kTwoPi;
    }
    // fmod of a tiny negative value can round up to exactly 2*pi.
    return wrapped >= kTwoPi ? 0.0 : wrapped;
}

Phasor Phasor::from_complex(std::complex<double> value) {
    const double amplitude = std::abs(value);
    if (amplitude == 0.0) {
        return Phasor{0.0, 0.0, true};
    }
    return Phasor{amplitude, wrap_phase(std::arg(value)), false};
}

Phasor four_bucket(double c1, double c2, double c3, double c4) {
    require(std::isfinite(c1) && std::isfinite(c2) && std::isfinite(c3) && std::isfinite(c4),
            "bucket samples must be finite");
    const double in_phase = c1 - c3;
    const double quadrature = c4 - c2;
    if (in_phase == 0.0 && quadrature == 0.0) {
        return Phasor{0.0, 0.0, true};
    }
    return Phasor{0.5 * std::hypot(quadrature, in_phase), wrap_phase(std::atan2(quadrature, in_phase)), false};
}

DepthEstimate phase_to_depth(const Phasor& phasor, double f_mod, const PhaseTofOptions& options) {
    require(std::isfinite(f_mod) && f_mod > 0.0, "modulation frequency must be finite and > 0");
    const double path_length = kSpeedOfLight * phasor.phase / (kTwoPi * f_mod);
    DepthEstimate est;
    est.depth = 0.5 * path_length;
    est.amplitude = phasor.amplitude;
    est.wrapped = false;
    est.confidence = phasor.degenerate ? 0.0 : confidence_for(phasor.amplitude, options);
    return est;
}

double ambiguity_distance(double f_mod) {
    require(f_mod > 0.0, "modulation frequency must be > 0");
    return kSpeedOfLight / (2.0 * f_mod);
}

Phasor multipath_phasor(std::span<const Phasor> paths) {
    require(!paths.empty(), "multipath sum needs at least one path");
    std::complex<double> sum{0.0, 0.0};
    for (const auto& p : paths) {
        sum += p.to_complex();
    }
    // Exact cancellation leaves rounding residue of order eps * sum|a_i|.
    double scale = 0.0;
    for (const auto& p : paths) {
        scale += p.amplitude;
    }
    if (std::abs(sum) <= 1e-14 * scale) {
        return Phasor{0.0, 0.0, true};
    }
    return Phasor::from_complex(sum);
}

DepthEstimate estimate_depth_phase(const ScenePoint& point, double f_mod, const NoiseSpec& noise,
                                   const PhaseTofOptions& options) {
    const auto taus = four_bucket_shifts(f_mod);
    const auto clean = synth_phase_correlation(point, f_mod, taus);
    const auto measured = add_noise(clean, noise);
    const auto c = measured.samples();
    return phase_to_depth(four_bucket(c[0], c[1], c[2], c[3]), f_mod, options);
}

} // namespace fdtof
