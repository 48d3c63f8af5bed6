#pragma once

#include "fdtof/signal_model.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace fdtof {

enum class Window { Rectangular, Hann };

/// Magnitude spectrum of a modulation-frequency sweep. The axis is calibrated
/// in seconds of delay: a path of length z peaks at kappa = z / c.
struct Spectrum {
    std::vector<double> kappa;
    std::vector<double> magnitude;
    double bin_width = 0.0;      ///< kappa step of the (zero-padded) grid
    double raw_bin_width = 0.0;  ///< kappa step without padding, 1 / (n * df)
    double window_sum = 0.0;     ///< sum of window weights; tone amplitude = 2 |X| / window_sum
    double bandwidth = 0.0;      ///< f_max - f_min of the sweep, Hz

    std::size_t size() const noexcept { return magnitude.size(); }
    double median_magnitude() const;
};

enum class PeakFlag : std::uint32_t {
    None = 0,
    NotConverged = 1u << 0,
    Degenerate = 1u << 1,
    ExposureToneOutOfBand = 1u << 2,
    ExposureToneVerified = 1u << 3,
};

/// One recovered return.
struct TonePeak {
    double depth = 0.0;        ///< meters, delay * c / 2
    double delay = 0.0;        ///< seconds, z / c
    double amplitude = 0.0;    ///< correlation amplitude (alpha / 2 of the return)
    double peak_quality = 1.0; ///< peak magnitude over spectral median, >= 1
    std::uint32_t flags = 0;
    int iterations = 0;

    bool has(PeakFlag flag) const noexcept { return (flags & static_cast<std::uint32_t>(flag)) != 0; }
    void set(PeakFlag flag) noexcept { flags |= static_cast<std::uint32_t>(flag); }
};

struct ToneOptions {
    std::size_t zero_pad_factor = 8;
    Window window = Window::Hann;
    /// Minimum full primal-domain cycles (bandwidth * delay) a tone must span.
    double min_cycles = 1.0;
    /// Upper limit of the delay search band, seconds.
    double max_delay = std::numeric_limits<double>::infinity();
};

struct QuinnFernandesOptions {
    ToneOptions tone;
    int max_iterations = 20;
    /// Convergence when successive iterates differ by less than this fraction of a bin.
    double tolerance_bins = 1e-6;
};

struct SeparationOptions {
    ToneOptions tone;
    /// A peak must exceed this multiple of the spectral median ...
    double median_factor = 6.0;
    /// ... and this fraction of the strongest peak.
    double min_relative_height = 0.1;
};

Spectrum periodogram(const PrimalSignal& signal, std::size_t zero_pad_factor, Window window = Window::Hann);

/// Periodogram argmax refined by a 3-point parabola on log magnitude.
TonePeak estimate_tone_interp(const PrimalSignal& signal, const ToneOptions& options = {});

/// Quinn-Fernandes single-tone estimate. `initial_delay` (seconds) seeds the
/// iteration; without it the interpolated periodogram provides the start.
TonePeak estimate_tone_qf(const PrimalSignal& signal, std::optional<double> initial_delay = std::nullopt,
                          const QuinnFernandesOptions& options = {});

/// Up to `max_k` returns, one per significant spectral peak, ascending by depth.
std::vector<TonePeak> separate_multipath(const PrimalSignal& signal, std::size_t max_k,
                                         const SeparationOptions& options = {});

/// Smallest resolvable path-length separation, 1.2 c / bandwidth.
double axial_resolution(const FrequencySweep& sweep);
double axial_resolution(double bandwidth);

namespace detail {

struct RefinedPeak {
    double bin = 0.0;       ///< fractional bin index
    double magnitude = 0.0; ///< interpolated peak magnitude
};

/// Parabolic refinement on log magnitude around bin `k`.
RefinedPeak refine_peak(const std::vector<double>& magnitude, std::size_t k);

/// Indices of strict local maxima in [first, last].
std::vector<std::size_t> local_maxima(const std::vector<double>& magnitude, std::size_t first, std::size_t last);

/// Index range of the spectrum inside [0, max_delay], DC bin excluded.
std::pair<std::size_t, std::size_t> search_band(const Spectrum& spectrum, double max_delay);

std::vector<double> window_weights(Window window, std::size_t n);

} // namespace detail

} // namespace fdtof
