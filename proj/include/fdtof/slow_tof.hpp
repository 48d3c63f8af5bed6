#pragma once

#include "fdtof/freq_domain.hpp"
#include "fdtof/signal_model.hpp"

#include <optional>

namespace fdtof {

/// A conventional camera swept over modulation frequencies at one fixed exposure.
struct SlowCaptureConfig {
    double exposure; ///< seconds, t_E
    FrequencySweep sweep;

    SlowCaptureConfig(double exposure_s, FrequencySweep sweep_);
};

struct SlowTofOptions {
    std::size_t zero_pad_factor = 8;
    Window window = Window::Hann;
    /// Delay band searched for the path tone, seconds (100 ns ~ 15 m depth).
    double max_delay = 100e-9;
    double median_factor = 6.0;
    double min_relative_height = 0.1;
    double min_cycles = 1.0;
    /// Max distance, in unpadded bins, between predicted and observed exposure tone.
    double exposure_tolerance_bins = 2.0;
};

/// Everything recovered from a slow sweep. The exposure tone sits at delay
/// z/c + t_E; its position on the sampled grid is usually aliased, so it is
/// tracked both unfolded (`exposure_tone_delay`) and folded (`exposure_tone_alias`).
struct SlowTofAnalysis {
    TonePeak peak;
    double path_delay = 0.0;
    bool exposure_tone_in_band = false;
    /// Unfolded delay of the observed exposure tone, when it was found.
    std::optional<double> exposure_tone_delay;
    double exposure_tone_alias = 0.0;
};

/// Folds a delay onto [0, 1 / (2 df)], the unaliased band of a sweep with spacing df.
double fold_delay(double delay, double spacing) noexcept;

SlowTofAnalysis analyze_slow_capture(const PrimalSignal& signal, const SlowCaptureConfig& cfg,
                                     const SlowTofOptions& options = {});

/// Depth from the lower-delay tone of a pre-whitened slow sweep.
TonePeak estimate_depth_slow(const PrimalSignal& signal, const SlowCaptureConfig& cfg,
                             const SlowTofOptions& options = {});

/// Log-log slope of the per-cycle envelope against modulation frequency:
/// about -1 for an integrating camera, about 0 for a fast correlating sensor.
double verify_amplitude_decay(const PrimalSignal& signal);

} // namespace fdtof
