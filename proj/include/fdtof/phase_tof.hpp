#pragma once

#include "fdtof/signal_model.hpp"

#include <complex>
#include <span>

namespace fdtof {

/// Amplitude and phase of a measured return, phase in [0, 2*pi).
struct Phasor {
    double amplitude = 0.0;
    double phase = 0.0;
    /// Set when the resultant vanished (no AC signal), phase is then 0.
    bool degenerate = false;

    static Phasor from_complex(std::complex<double> value);
    std::complex<double> to_complex() const { return std::polar(amplitude, phase); }
};

struct DepthEstimate {
    double depth = 0.0;      ///< meters, d = z / 2
    double amplitude = 0.0;
    bool wrapped = false;    ///< only ever set by callers that know ground truth
    double confidence = 0.0; ///< in [0, 1]
};

struct PhaseTofOptions {
    /// Amplitude at which confidence saturates at 1.
    double reference_amplitude = 0.5;
};

/// Wraps any angle into [0, 2*pi).
double wrap_phase(double phase) noexcept;

/// Phase and amplitude from correlation samples at 2*pi*f*tau = 0, pi/2, pi, 3pi/2.
/// Amplitude is half the AC amplitude of the correlation (alpha/2 of the return).
Phasor four_bucket(double c1, double c2, double c3, double c4);

/// Depth from phase at a single frequency. Never reports wrapping.
DepthEstimate phase_to_depth(const Phasor& phasor, double f_mod, const PhaseTofOptions& options = {});

/// Depth beyond which a single-frequency phase measurement wraps, c / (2 f).
double ambiguity_distance(double f_mod);

/// Resultant of several same-frequency returns (complex sum).
Phasor multipath_phasor(std::span<const Phasor> paths);

/// Conventional pipeline: synthesize the four buckets, add noise, recover phase, convert to depth.
DepthEstimate estimate_depth_phase(const ScenePoint& point, double f_mod, const NoiseSpec& noise,
                                   const PhaseTofOptions& options = {});

} // namespace fdtof
