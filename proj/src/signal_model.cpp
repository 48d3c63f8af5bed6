#include "fdtof/signal_model.hpp"

#include "fdtof/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

namespace fdtof {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double population_variance(std::span<const double> values) {
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double acc = 0.0;
    for (double v : values) {
        acc += (v - mean) * (v - mean);
    }
    return acc / n;
}

} // namespace

ScenePoint::ScenePoint(std::vector<PathComponent> paths, double ambient)
    : paths_(std::move(paths)), ambient_(ambient) {
    require(!paths_.empty(), "scene point needs at least one path");
    require(std::isfinite(ambient_) && ambient_ >= 0.0, "ambient must be finite and >= 0");
    for (const auto& p : paths_) {
        require(std::isfinite(p.amplitude) && p.amplitude >= 0.0, "path amplitude must be finite and >= 0");
        require(std::isfinite(p.path_length) && p.path_length >= 0.0, "path length must be finite and >= 0");
    }
    std::stable_sort(paths_.begin(), paths_.end(),
                     [](const PathComponent& a, const PathComponent& b) { return a.path_length < b.path_length; });
}

ScenePoint ScenePoint::at_depth(double depth, double amplitude, double ambient) {
    return ScenePoint({PathComponent{amplitude, 2.0 * depth}}, ambient);
}

FrequencySweep::FrequencySweep(double f_min, double f_max, std::size_t n_samples)
    : f_min_(f_min), f_max_(f_max), n_(n_samples) {
    require(std::isfinite(f_min) && f_min > 0.0, "sweep f_min must be > 0");
    require(std::isfinite(f_max) && f_max > f_min, "sweep f_max must exceed f_min");
    require(n_samples >= 3, "sweep needs at least 3 samples");
}

double FrequencySweep::frequency(std::size_t i) const noexcept {
    // Pin the last sample to f_max exactly.
    if (i + 1 == n_) {
        return f_max_;
    }
    return f_min_ + static_cast<double>(i) * spacing();
}

std::vector<double> FrequencySweep::frequencies() const {
    std::vector<double> f(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        f[i] = frequency(i);
    }
    return f;
}

PrimalSignal::PrimalSignal(PrimalDomain domain, std::vector<double> coordinates, std::vector<double> samples)
    : domain_(domain), coordinates_(std::move(coordinates)), samples_(std::move(samples)) {
    require(coordinates_.size() == samples_.size(), "coordinate and sample counts differ");
    require(all_finite(coordinates_), "non-finite primal coordinate");
    require(all_finite(samples_), "non-finite sample value");
    for (std::size_t i = 1; i < coordinates_.size(); ++i) {
        require(coordinates_[i] > coordinates_[i - 1], "primal coordinates must be strictly increasing");
    }
}

double PrimalSignal::spacing() const {
    require(coordinates_.size() >= 2, "spacing needs at least two samples");
    return (coordinates_.back() - coordinates_.front()) / static_cast<double>(coordinates_.size() - 1);
}

bool PrimalSignal::is_uniform(double rel_tol) const {
    if (coordinates_.size() < 2) {
        return true;
    }
    const double step = spacing();
    for (std::size_t i = 1; i < coordinates_.size(); ++i) {
        if (std::abs((coordinates_[i] - coordinates_[i - 1]) - step) > rel_tol * step) {
            return false;
        }
    }
    return true;
}

PrimalSignal PrimalSignal::with_samples(std::vector<double> samples) const {
    return PrimalSignal(domain_, coordinates_, std::move(samples));
}

bool NoiseSpec::is_noiseless() const noexcept {
    return std::isinf(snr_db) && snr_db > 0.0;
}

PrimalSignal synth_phase_correlation(const ScenePoint& point, double f_mod, std::span<const double> taus) {
    require(std::isfinite(f_mod) && f_mod > 0.0, "modulation frequency must be finite and > 0");
    require(!taus.empty(), "need at least one phase shift");
    require(all_finite(taus), "non-finite phase shift");

    std::vector<double> samples(taus.size(), point.ambient());
    for (const auto& path : point.paths()) {
        const double phase = kTwoPi * path.path_length * f_mod / kSpeedOfLight;
        for (std::size_t i = 0; i < taus.size(); ++i) {
            samples[i] += 0.5 * path.amplitude * std::cos(kTwoPi * f_mod * taus[i] + phase);
        }
    }
    return PrimalSignal(PrimalDomain::PhaseShift, std::vector<double>(taus.begin(), taus.end()), std::move(samples));
}

std::vector<double> four_bucket_shifts(double f_mod) {
    require(std::isfinite(f_mod) && f_mod > 0.0, "modulation frequency must be finite and > 0");
    const double quarter = 0.25 / f_mod;
    return {0.0, quarter, 2.0 * quarter, 3.0 * quarter};
}

PrimalSignal synth_fd_sweep(const ScenePoint& point, const FrequencySweep& sweep) {
    auto freqs = sweep.frequencies();
    std::vector<double> samples(freqs.size(), point.ambient());
    for (const auto& path : point.paths()) {
        const double delay = path.delay();
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            samples[i] += 0.5 * path.amplitude * std::cos(kTwoPi * delay * freqs[i]);
        }
    }
    return PrimalSignal(PrimalDomain::ModulationFrequency, std::move(freqs), std::move(samples));
}

PrimalSignal synth_slow_sweep(const ScenePoint& point, const FrequencySweep& sweep, double exposure) {
    require(std::isfinite(exposure) && exposure > 0.0, "exposure must be finite and > 0");
    auto freqs = sweep.frequencies();
    std::vector<double> samples(freqs.size(), point.ambient() * exposure);
    for (const auto& path : point.paths()) {
        const double delay = path.delay();
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            const double w = kTwoPi * freqs[i];
            samples[i] += path.amplitude / w * (std::sin(w * (exposure + delay)) - std::sin(w * delay));
        }
    }
    return PrimalSignal(PrimalDomain::ModulationFrequency, std::move(freqs), std::move(samples));
}

PrimalSignal add_noise(const PrimalSignal& signal, const NoiseSpec& noise) {
    require(signal.size() >= 2, "noise injection needs at least two samples");
    require(!std::isnan(noise.snr_db), "SNR must not be NaN");
    if (noise.is_noiseless()) {
        return signal;
    }
    require(std::isfinite(noise.snr_db), "SNR of -inf is not meaningful");

    const auto clean = signal.samples();
    const double p_ac = population_variance(clean);
    if (!(p_ac > 0.0)) {
        fail(ErrorKind::DegenerateSignal, "signal has no AC power; SNR is undefined");
    }
    const double sigma = std::sqrt(p_ac / std::pow(10.0, noise.snr_db / 10.0));

    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    std::vector<double> noisy(clean.begin(), clean.end());
    for (double& v : noisy) {
        v += gauss(rng);
    }
    return signal.with_samples(std::move(noisy));
}

} // namespace fdtof
