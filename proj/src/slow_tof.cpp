#include "fdtof/slow_tof.hpp"

#include "fdtof/error.hpp"
#include "lstsq.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace fdtof {

namespace {

void require_matching_sweep(const PrimalSignal& signal, const FrequencySweep& sweep) {
    require(signal.domain() == PrimalDomain::ModulationFrequency, "slow-TOF needs a modulation-frequency signal");
    require(signal.size() == sweep.size(), "signal length does not match the capture sweep");
    const auto f = signal.coordinates();
    const double tol = 1e-9 * sweep.f_max();
    require(std::abs(f.front() - sweep.f_min()) <= tol && std::abs(f.back() - sweep.f_max()) <= tol,
            "signal frequencies do not match the capture sweep");
    require(signal.is_uniform(), "modulation frequencies must be uniformly spaced");
}

// Multiply by f to flatten the 1/f envelope, then drop the straight line the
// ambient term turns into.
std::vector<double> whiten(const PrimalSignal& signal) {
    const auto f = signal.coordinates();
    const auto s = signal.samples();
    const double mid = 0.5 * (f.front() + f.back());
    const double half = 0.5 * (f.back() - f.front());

    std::vector<double> x(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        x[i] = s[i] * f[i];
    }
    std::array<double, 2> coef{};
    const auto basis = [&](std::size_t i, std::array<double, 2>& row) { row = {1.0, (f[i] - mid) / half}; };
    if (detail::least_squares<2>(x, basis, coef)) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] -= coef[0] + coef[1] * (f[i] - mid) / half;
        }
    }
    return x;
}

struct Candidate {
    std::size_t bin = 0;
    double delay = 0.0;
    double magnitude = 0.0;
};

// Local maximum of the spectrum closest to `delay` within `tolerance`, if any.
std::optional<Candidate> find_near(const Spectrum& spectrum, double delay, double tolerance, double min_magnitude) {
    const double lo = std::max(0.0, delay - tolerance);
    const double hi = delay + tolerance;
    const auto first = static_cast<std::size_t>(std::floor(lo / spectrum.bin_width));
    const auto last = std::min(spectrum.size() - 1, static_cast<std::size_t>(std::ceil(hi / spectrum.bin_width)));
    std::optional<Candidate> best;
    for (auto k : detail::local_maxima(spectrum.magnitude, first, last)) {
        const auto refined = detail::refine_peak(spectrum.magnitude, k);
        const double d = refined.bin * spectrum.bin_width;
        if (std::abs(d - delay) > tolerance || refined.magnitude < min_magnitude) {
            continue;
        }
        if (!best || std::abs(d - delay) < std::abs(best->delay - delay)) {
            best = Candidate{k, d, refined.magnitude};
        }
    }
    return best;
}

// Delay that aliases to `folded` near the true delay `nominal` on a grid of spacing df.
double unfold_delay(double nominal, double folded_predicted, double folded_observed, double spacing) {
    const double period = 1.0 / spacing;
    const double r = nominal - period * std::floor(nominal / period);
    const double sign = r <= 0.5 * period ? 1.0 : -1.0;
    return nominal + sign * (folded_observed - folded_predicted);
}

} // namespace

SlowCaptureConfig::SlowCaptureConfig(double exposure_s, FrequencySweep sweep_)
    : exposure(exposure_s), sweep(sweep_) {
    require(std::isfinite(exposure) && exposure > 0.0, "exposure must be finite and > 0");
}

double fold_delay(double delay, double spacing) noexcept {
    const double period = 1.0 / spacing;
    const double r = delay - period * std::floor(delay / period);
    return r <= 0.5 * period ? r : period - r;
}

SlowTofAnalysis analyze_slow_capture(const PrimalSignal& signal, const SlowCaptureConfig& cfg,
                                     const SlowTofOptions& options) {
    require_matching_sweep(signal, cfg.sweep);
    const double df = signal.spacing();

    const PrimalSignal whitened = signal.with_samples(whiten(signal));
    const auto spectrum = periodogram(whitened, options.zero_pad_factor, options.window);
    const auto [first, last] = detail::search_band(spectrum, options.max_delay);
    const double tolerance = options.exposure_tolerance_bins * spectrum.raw_bin_width;
    // Whitened tones carry alpha / (2 pi); report alpha / 2 like the fast sensor.
    const auto to_amplitude = [&](double magnitude) {
        return std::numbers::pi * 2.0 * magnitude / spectrum.window_sum;
    };

    const double strongest = *std::max_element(spectrum.magnitude.begin() + 1, spectrum.magnitude.end());
    const double floor_abs = std::max(options.median_factor * spectrum.median_magnitude(),
                                      options.min_relative_height * strongest);

    std::vector<Candidate> candidates;
    for (auto k : detail::local_maxima(spectrum.magnitude, first, last)) {
        if (spectrum.magnitude[k] <= floor_abs) {
            continue;
        }
        const auto refined = detail::refine_peak(spectrum.magnitude, k);
        const double delay = refined.bin * spectrum.bin_width;
        if (delay * spectrum.bandwidth < options.min_cycles) {
            continue;
        }
        candidates.push_back({k, delay, refined.magnitude});
    }

    // Drop candidates that are the exposure tone of another candidate (or of a
    // zero-length path). When the fold reflects off the band edge the relation
    // is symmetric, i and j each predicting the other; the lower delay is then
    // taken as the path.
    const auto predicts = [&](std::size_t i, std::size_t j) {
        return i != j && std::abs(candidates[j].delay - fold_delay(candidates[i].delay + cfg.exposure, df)) <= tolerance;
    };
    const auto explained = [&](std::size_t j) {
        if (std::abs(candidates[j].delay - fold_delay(cfg.exposure, df)) <= tolerance) {
            return true;
        }
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (predicts(i, j) && (!predicts(j, i) || candidates[i].delay < candidates[j].delay)) {
                return true;
            }
        }
        return false;
    };
    std::vector<Candidate> paths;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (!explained(j)) {
            paths.push_back(candidates[j]);
        }
    }

    SlowTofAnalysis result;
    if (paths.empty()) {
        // Only the exposure tone of a zero-length path (or nothing) is present.
        result.peak.set(PeakFlag::Degenerate);
        result.exposure_tone_alias = fold_delay(cfg.exposure, df);
        if (auto tone = find_near(spectrum, result.exposure_tone_alias, tolerance, 0.0)) {
            result.peak.amplitude = to_amplitude(tone->magnitude);
            result.exposure_tone_delay = unfold_delay(cfg.exposure, result.exposure_tone_alias, tone->delay, df);
        }
        result.exposure_tone_in_band = result.exposure_tone_alias <= options.max_delay;
        return result;
    }

    const auto path = *std::min_element(paths.begin(), paths.end(),
                                        [](const Candidate& a, const Candidate& b) { return a.delay < b.delay; });
    result.path_delay = path.delay;
    result.peak.delay = path.delay;
    result.peak.depth = 0.5 * path.delay * kSpeedOfLight;
    result.peak.amplitude = to_amplitude(path.magnitude);
    const double median = spectrum.median_magnitude();
    result.peak.peak_quality = median > 0.0 ? std::max(1.0, path.magnitude / median) : 1.0;

    const double exposure_delay = path.delay + cfg.exposure;
    result.exposure_tone_alias = fold_delay(exposure_delay, df);
    result.exposure_tone_in_band = result.exposure_tone_alias <= options.max_delay;
    const auto tone = find_near(spectrum, result.exposure_tone_alias, tolerance, 0.25 * path.magnitude);
    if (tone) {
        result.peak.set(PeakFlag::ExposureToneVerified);
        result.exposure_tone_delay = unfold_delay(exposure_delay, result.exposure_tone_alias, tone->delay, df);
    }
    if (!result.exposure_tone_in_band) {
        result.peak.set(PeakFlag::ExposureToneOutOfBand);
    } else if (!tone) {
        fail(ErrorKind::InconsistentExposure,
             "no tone at the delay predicted by the configured exposure; the exposure was not constant "
             "across the sweep or does not match the configuration");
    }
    return result;
}

TonePeak estimate_depth_slow(const PrimalSignal& signal, const SlowCaptureConfig& cfg,
                             const SlowTofOptions& options) {
    return analyze_slow_capture(signal, cfg, options).peak;
}

double verify_amplitude_decay(const PrimalSignal& signal) {
    require(signal.domain() == PrimalDomain::ModulationFrequency, "decay fit needs a modulation-frequency signal");
    const auto spectrum = periodogram(signal, 8, Window::Hann);
    const auto f = signal.coordinates();
    const auto s = signal.samples();
    const std::size_t n = s.size();

    // Block length: one period of the lowest-delay significant component.
    const double strongest = *std::max_element(spectrum.magnitude.begin() + 1, spectrum.magnitude.end());
    double delay = 0.0;
    for (auto k : detail::local_maxima(spectrum.magnitude, 1, spectrum.size() - 1)) {
        const double d = detail::refine_peak(spectrum.magnitude, k).bin * spectrum.bin_width;
        if (spectrum.magnitude[k] >= 0.25 * strongest && d * spectrum.bandwidth >= 1.0) {
            delay = d;
            break;
        }
    }
    if (!(delay > 0.0)) {
        fail(ErrorKind::InsufficientCycles, "no oscillation spanning a full cycle");
    }
    const auto block = static_cast<std::size_t>(std::lround(1.0 / (delay * signal.spacing())));
    const std::size_t n_blocks = block == 0 ? 0 : n / block;
    if (n_blocks < 3) {
        fail(ErrorKind::InsufficientCycles,
             "envelope fit needs at least 3 cycles, found " + std::to_string(n_blocks));
    }

    std::vector<double> sorted(s.begin(), s.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
    const double dc = sorted[n / 2];

    // Re-pick each block's envelope sample with the current slope compensated,
    // otherwise a steep envelope pulls the pick towards the block start.
    double slope = 0.0;
    for (int pass = 0; pass < 10; ++pass) {
        std::vector<double> log_f;
        std::vector<double> log_e;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            std::size_t pick = b * block;
            double best = -1.0;
            for (std::size_t i = b * block; i < (b + 1) * block; ++i) {
                const double score = std::abs(s[i] - dc) * std::pow(f[i], -slope);
                if (score > best) {
                    best = score;
                    pick = i;
                }
            }
            const double e = std::abs(s[pick] - dc);
            if (e > 0.0) {
                log_f.push_back(std::log(f[pick]));
                log_e.push_back(std::log(e));
            }
        }
        if (log_f.size() < 3) {
            fail(ErrorKind::InsufficientCycles, "envelope fit needs at least 3 non-zero maxima");
        }
        std::array<double, 2> coef{};
        const bool ok = detail::least_squares<2>(
            log_e, [&](std::size_t i, std::array<double, 2>& row) { row = {1.0, log_f[i]}; }, coef);
        require(ok, "envelope fit is singular");
        slope = coef[1];
    }
    return slope;
}

} // namespace fdtof
