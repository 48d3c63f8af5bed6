#include "fdtof/freq_domain.hpp"

#include "fdtof/error.hpp"
#include "fft.hpp"
#include "lstsq.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace fdtof {

namespace {

constexpr double kPi = std::numbers::pi;

void require_sweep_signal(const PrimalSignal& signal) {
    require(signal.domain() == PrimalDomain::ModulationFrequency,
            "spectral estimation needs a modulation-frequency signal");
    require(signal.size() >= 8, "spectral estimation needs at least 8 samples");
    require(signal.is_uniform(), "modulation frequencies must be uniformly spaced");
}

std::vector<double> demeaned(std::span<const double> samples) {
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    std::vector<double> out(samples.begin(), samples.end());
    for (double& v : out) {
        v -= mean;
    }
    return out;
}

double cycles_of(double delay, double bandwidth) { return delay * bandwidth; }

void check_cycles(double delay, double bandwidth, double min_cycles) {
    const double cycles = cycles_of(delay, bandwidth);
    if (!(cycles >= min_cycles)) {
        fail(ErrorKind::InsufficientBandwidth,
             "tone spans " + std::to_string(cycles) + " cycles over the sweep; at least " +
                 std::to_string(min_cycles) + " required");
    }
}

double quality_at(const Spectrum& spectrum, double magnitude) {
    const double median = spectrum.median_magnitude();
    if (!(median > 0.0)) {
        return magnitude > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
    return std::max(1.0, magnitude / median);
}

TonePeak peak_from_bin(const Spectrum& spectrum, const detail::RefinedPeak& refined) {
    TonePeak peak;
    peak.delay = refined.bin * spectrum.bin_width;
    peak.depth = 0.5 * peak.delay * kSpeedOfLight;
    peak.amplitude = 2.0 * refined.magnitude / spectrum.window_sum;
    peak.peak_quality = quality_at(spectrum, refined.magnitude);
    return peak;
}

// Quinn-Fernandes iteration on a zero-mean series. Returns the fixed-point
// angular frequency (rad/sample) reached from `start`.
struct QfResult {
    double omega = 0.0;
    bool converged = false;
};

QfResult quinn_fernandes(std::span<const double> y, double start, int max_iterations, double tolerance) {
    constexpr double kEdge = 1e-12;
    double alpha = 2.0 * std::cos(start);
    double omega = start;
    std::vector<double> xi(y.size() + 2, 0.0);
    for (int it = 0; it < max_iterations; ++it) {
        // xi[t + 2] holds xi_t; xi_{-1} = xi_{-2} = 0.
        for (std::size_t t = 0; t < y.size(); ++t) {
            xi[t + 2] = y[t] + alpha * xi[t + 1] - xi[t];
        }
        double num = 0.0;
        double den = 0.0;
        for (std::size_t t = 0; t < y.size(); ++t) {
            num += (xi[t + 2] + xi[t]) * xi[t + 1];
            den += xi[t + 1] * xi[t + 1];
        }
        if (!(den > 0.0) || !std::isfinite(num)) {
            return {omega, false};
        }
        const double beta = std::clamp(num / den, -2.0 + kEdge, 2.0 - kEdge);
        const double next = std::acos(beta / 2.0);
        const bool done = std::abs(next - omega) < tolerance;
        alpha = beta;
        omega = next;
        if (done) {
            return {omega, true};
        }
    }
    return {omega, false};
}

struct SinusoidFit {
    std::vector<double> model;
    double amplitude = 0.0;
};

// Least-squares fit of mean + a cos(omega t) + b sin(omega t).
SinusoidFit fit_sinusoid(std::span<const double> y, double omega) {
    std::array<double, 3> coef{};
    const bool ok = detail::least_squares<3>(
        y,
        [omega](std::size_t t, std::array<double, 3>& row) {
            const double arg = omega * static_cast<double>(t);
            row = {1.0, std::cos(arg), std::sin(arg)};
        },
        coef);
    SinusoidFit fit;
    fit.model.resize(y.size(), 0.0);
    if (!ok) {
        return fit;
    }
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double arg = omega * static_cast<double>(t);
        fit.model[t] = coef[0] + coef[1] * std::cos(arg) + coef[2] * std::sin(arg);
    }
    fit.amplitude = std::hypot(coef[1], coef[2]);
    return fit;
}

} // namespace

double Spectrum::median_magnitude() const {
    if (magnitude.empty()) {
        return 0.0;
    }
    std::vector<double> sorted = magnitude;
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    if (sorted.size() % 2 == 1) {
        return *mid;
    }
    const double upper = *mid;
    const double lower = *std::max_element(sorted.begin(), mid);
    return 0.5 * (lower + upper);
}

namespace detail {

std::vector<double> window_weights(Window window, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (window == Window::Hann) {
        // Periodic-free form with non-zero end samples (numpy hanning(n + 2)[1:-1]).
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i + 1) / static_cast<double>(n + 1)));
        }
    }
    return w;
}

RefinedPeak refine_peak(const std::vector<double>& magnitude, std::size_t k) {
    RefinedPeak peak{static_cast<double>(k), magnitude[k]};
    if (k == 0 || k + 1 >= magnitude.size()) {
        return peak;
    }
    const double l = magnitude[k - 1];
    const double m = magnitude[k];
    const double r = magnitude[k + 1];
    if (!(l > 0.0 && m > 0.0 && r > 0.0)) {
        return peak;
    }
    const double ll = std::log(l);
    const double lm = std::log(m);
    const double lr = std::log(r);
    const double denom = ll - 2.0 * lm + lr;
    if (!(denom < 0.0)) {
        return peak;
    }
    const double delta = std::clamp(0.5 * (ll - lr) / denom, -0.5, 0.5);
    peak.bin += delta;
    peak.magnitude = std::exp(lm - 0.25 * (ll - lr) * delta);
    return peak;
}

std::vector<std::size_t> local_maxima(const std::vector<double>& magnitude, std::size_t first, std::size_t last) {
    std::vector<std::size_t> out;
    if (magnitude.size() < 3) {
        return out;
    }
    first = std::max<std::size_t>(first, 1);
    last = std::min(last, magnitude.size() - 2);
    for (std::size_t k = first; k <= last; ++k) {
        if (magnitude[k] > magnitude[k - 1] && magnitude[k] >= magnitude[k + 1]) {
            out.push_back(k);
        }
    }
    return out;
}

std::pair<std::size_t, std::size_t> search_band(const Spectrum& spectrum, double max_delay) {
    std::size_t last = spectrum.size() - 1;
    if (std::isfinite(max_delay)) {
        const double bins = std::floor(max_delay / spectrum.bin_width);
        last = std::min<std::size_t>(last, static_cast<std::size_t>(std::max(0.0, bins)));
    }
    return {1, last};
}

} // namespace detail

Spectrum periodogram(const PrimalSignal& signal, std::size_t zero_pad_factor, Window window) {
    require_sweep_signal(signal);
    require(zero_pad_factor >= 1, "zero-pad factor must be >= 1");

    const std::size_t n = signal.size();
    auto x = demeaned(signal.samples());
    const auto w = detail::window_weights(window, n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] *= w[i];
    }

    const std::size_t n_fft = n * zero_pad_factor;
    const auto bins = detail::real_dft(x, n_fft);
    const double df = signal.spacing();

    Spectrum s;
    s.bin_width = 1.0 / (static_cast<double>(n_fft) * df);
    s.raw_bin_width = 1.0 / (static_cast<double>(n) * df);
    s.window_sum = std::accumulate(w.begin(), w.end(), 0.0);
    s.bandwidth = signal.coordinates().back() - signal.coordinates().front();
    s.kappa.resize(bins.size());
    s.magnitude.resize(bins.size());
    for (std::size_t k = 0; k < bins.size(); ++k) {
        s.kappa[k] = static_cast<double>(k) * s.bin_width;
        s.magnitude[k] = std::abs(bins[k]);
    }
    return s;
}

TonePeak estimate_tone_interp(const PrimalSignal& signal, const ToneOptions& options) {
    const auto spectrum = periodogram(signal, options.zero_pad_factor, options.window);
    const auto [first, last] = detail::search_band(spectrum, options.max_delay);
    require(first <= last, "delay search band is empty");

    std::size_t best = first;
    for (std::size_t k = first; k <= last; ++k) {
        if (spectrum.magnitude[k] > spectrum.magnitude[best]) {
            best = k;
        }
    }
    auto peak = peak_from_bin(spectrum, detail::refine_peak(spectrum.magnitude, best));
    check_cycles(peak.delay, spectrum.bandwidth, options.min_cycles);
    return peak;
}

TonePeak estimate_tone_qf(const PrimalSignal& signal, std::optional<double> initial_delay,
                          const QuinnFernandesOptions& options) {
    const auto spectrum = periodogram(signal, options.tone.zero_pad_factor, options.tone.window);
    const double df = signal.spacing();
    const std::size_t n = signal.size();
    const double to_omega = 2.0 * kPi * df; // rad/sample per second of delay
    const double tolerance = options.tolerance_bins * 2.0 * kPi / static_cast<double>(n);

    double start = 0.0;
    if (initial_delay) {
        require(std::isfinite(*initial_delay) && *initial_delay > 0.0, "initial delay must be > 0");
        start = *initial_delay * to_omega;
    } else {
        start = estimate_tone_interp(signal, options.tone).delay * to_omega;
    }
    require(start > 0.0 && start < kPi, "initial delay outside the unaliased band");

    const auto y = demeaned(signal.samples());

    // The plain iteration settles slightly off the true frequency for real
    // tones spanning few cycles. The offset is a smooth function of the tone,
    // so it is cancelled by running the same iteration on the least-squares
    // model at the current estimate and shifting by the difference.
    const auto target = quinn_fernandes(y, start, options.max_iterations, tolerance);
    bool converged = target.converged;

    double omega = start;
    double best_omega = start;
    double best_step = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool outer_converged = false;
    for (int it = 1; it <= options.max_iterations; ++it) {
        iterations = it;
        auto fit = fit_sinusoid(signal.samples(), omega);
        const auto model = demeaned(fit.model);
        const auto replica = quinn_fernandes(model, omega, options.max_iterations, tolerance);
        converged = converged && replica.converged;
        const double step = target.omega - replica.omega;
        const double next = std::clamp(omega + step, 1e-9, kPi - 1e-9);
        if (std::abs(step) < best_step) {
            best_step = std::abs(step);
            best_omega = next;
        }
        omega = next;
        if (std::abs(step) < tolerance) {
            outer_converged = true;
            break;
        }
    }
    if (!outer_converged) {
        omega = best_omega;
    }

    TonePeak peak;
    peak.delay = omega / to_omega;
    peak.depth = 0.5 * peak.delay * kSpeedOfLight;
    peak.amplitude = fit_sinusoid(signal.samples(), omega).amplitude;
    peak.iterations = iterations;
    const auto nearest = static_cast<std::size_t>(std::lround(peak.delay / spectrum.bin_width));
    peak.peak_quality = quality_at(spectrum, spectrum.magnitude[std::min(nearest, spectrum.size() - 1)]);
    if (!(converged && outer_converged)) {
        peak.set(PeakFlag::NotConverged);
    }
    check_cycles(peak.delay, spectrum.bandwidth, options.tone.min_cycles);
    return peak;
}

std::vector<TonePeak> separate_multipath(const PrimalSignal& signal, std::size_t max_k,
                                         const SeparationOptions& options) {
    require(max_k >= 1, "max_k must be >= 1");
    const auto spectrum = periodogram(signal, options.tone.zero_pad_factor, options.tone.window);
    const auto [first, last] = detail::search_band(spectrum, options.tone.max_delay);

    const double floor_abs = options.median_factor * spectrum.median_magnitude();
    std::vector<std::size_t> candidates;
    for (auto k : detail::local_maxima(spectrum.magnitude, first, last)) {
        if (spectrum.magnitude[k] > floor_abs) {
            candidates.push_back(k);
        }
    }
    if (candidates.empty()) {
        return {};
    }
    double strongest = 0.0;
    for (auto k : candidates) {
        strongest = std::max(strongest, spectrum.magnitude[k]);
    }
    std::erase_if(candidates,
                  [&](std::size_t k) { return spectrum.magnitude[k] < options.min_relative_height * strongest; });
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return spectrum.magnitude[a] > spectrum.magnitude[b]; });

    std::vector<TonePeak> peaks;
    for (auto k : candidates) {
        if (peaks.size() == max_k) {
            break;
        }
        auto peak = peak_from_bin(spectrum, detail::refine_peak(spectrum.magnitude, k));
        if (cycles_of(peak.delay, spectrum.bandwidth) < options.tone.min_cycles) {
            continue;
        }
        peaks.push_back(peak);
    }
    std::sort(peaks.begin(), peaks.end(), [](const TonePeak& a, const TonePeak& b) { return a.depth < b.depth; });
    return peaks;
}

double axial_resolution(double bandwidth) {
    require(std::isfinite(bandwidth) && bandwidth > 0.0, "bandwidth must be > 0");
    return 1.2 * kSpeedOfLight / bandwidth;
}

double axial_resolution(const FrequencySweep& sweep) { return axial_resolution(sweep.bandwidth()); }

} // namespace fdtof
