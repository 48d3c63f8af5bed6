// fdtof: simulate and estimate depth from phase, frequency-swept and slow
// (integrating) time-of-flight captures.
#include "config.hpp"

#include "fdtof/error.hpp"
#include "fdtof/freq_domain.hpp"
#include "fdtof/io.hpp"
#include "fdtof/phase_tof.hpp"
#include "fdtof/scene_sim.hpp"
#include "fdtof/signal_model.hpp"
#include "fdtof/slow_tof.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>

namespace fs = std::filesystem;
using nlohmann::json;

namespace fdtof::cli {
namespace {

constexpr const char* kFdSweep = "10e6:1e9:256";
constexpr const char* kSlowSweep = "10e6:1e9:4096";

FrequencySweep parse_sweep(const std::string& text) {
    const auto a = text.find(':');
    const auto b = a == std::string::npos ? a : text.find(':', a + 1);
    if (b == std::string::npos) {
        throw UsageError("sweep '" + text + "' must look like f_min:f_max:n");
    }
    try {
        std::size_t used = 0;
        const double lo = std::stod(text.substr(0, a), &used);
        const double hi = std::stod(text.substr(a + 1, b - a - 1));
        const std::string n_text = text.substr(b + 1);
        const auto n = std::stoull(n_text, &used);
        if (used != n_text.size()) {
            throw std::invalid_argument("n");
        }
        return FrequencySweep(lo, hi, n);
    } catch (const Error& e) {
        throw UsageError("sweep '" + text + "': " + e.what());
    } catch (const std::exception&) {
        throw UsageError("sweep '" + text + "' must look like f_min:f_max:n");
    }
}

std::string format_sweep(const FrequencySweep& s) {
    return io::format_double(s.f_min()) + ":" + io::format_double(s.f_max()) + ":" + std::to_string(s.size());
}

json flag_names(const TonePeak& p) {
    json names = json::array();
    const std::pair<PeakFlag, const char*> table[] = {{PeakFlag::NotConverged, "not_converged"},
                                                      {PeakFlag::Degenerate, "degenerate"},
                                                      {PeakFlag::ExposureToneOutOfBand, "exposure_tone_out_of_band"},
                                                      {PeakFlag::ExposureToneVerified, "exposure_tone_verified"}};
    for (const auto& [flag, name] : table) {
        if (p.has(flag)) {
            names.push_back(name);
        }
    }
    return names;
}

json peak_json(const TonePeak& p) {
    return {{"depth_m", p.depth},           {"delay_s", p.delay}, {"amplitude", p.amplitude},
            {"peak_quality", p.peak_quality}, {"flags", flag_names(p)}, {"iterations", p.iterations}};
}

/// JSON has no infinity; +inf is written as the string "inf".
json db_json(double v) { return std::isinf(v) && v > 0 ? json("inf") : json(v); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Estimator default_estimator(const std::string& mode) {
    if (mode == "phase") {
        return Estimator::FourBucket;
    }
    return mode == "slow" ? Estimator::SlowTof : Estimator::QuinnFernandes;
}

void check_mode(const std::string& mode) {
    if (mode != "phase" && mode != "fd" && mode != "slow") {
        throw UsageError("mode must be phase, fd or slow, got '" + mode + "'");
    }
}

Estimator estimator_for(const std::string& name) {
    try {
        return parse_estimator(name);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw UsageError(std::string(what) + " must be finite and > 0");
    }
}

class Command {
public:
    explicit Command(CLI::App* sub) : sub_(sub) {
        out_.opt = sub->add_option("--out", out_.value, "Output directory");
        seed_.opt = sub->add_option("--seed", seed_.value, "Seed for every random draw");
    }
    virtual ~Command() = default;

    CLI::App* app() const { return sub_; }
    bool selected() const { return sub_->parsed(); }

    void resolve(ConfigResolver& cfg) {
        auto keys = config_keys();
        keys.insert(keys.end(), {"out", "seed"});
        cfg.declare(app()->get_name(), keys);
        resolve_options(cfg);
        out_dir_ = cfg.take_optional<std::string>("out", out_);
        seed = cfg.take_optional<std::uint64_t>("seed", seed_);
        if (needs_out() && !out_dir_) {
            throw UsageError("--out is required");
        }
        if (stochastic() && !seed) {
            throw UsageError("--seed is required for stochastic runs");
        }
    }

    /// Writes outputs; the resolved config goes last so its presence marks a complete run.
    void run(const json& resolved, std::ostream& console) {
        execute(console);
        if (out_dir_) {
            for (const auto& [name, content] : outputs_) {
                io::write_file_atomic(fs::path(*out_dir_) / name, content);
            }
            io::write_file_atomic(fs::path(*out_dir_) / "config.json", dump(resolved));
            for (const auto& [name, _] : outputs_) {
                console << "wrote " << (fs::path(*out_dir_) / name).string() << "\n";
            }
            console << "wrote " << (fs::path(*out_dir_) / "config.json").string() << "\n";
        }
    }

protected:
    virtual std::vector<std::string> config_keys() const = 0;
    virtual void resolve_options(ConfigResolver& cfg) = 0;
    virtual bool needs_out() const { return true; }
    virtual bool stochastic() const = 0;
    virtual void execute(std::ostream& console) = 0;

    void emit(std::string name, std::string content) { outputs_.emplace_back(std::move(name), std::move(content)); }

    std::optional<std::uint64_t> seed;

private:
    CLI::App* sub_;
    Flag<std::string> out_;
    Flag<std::uint64_t> seed_;
    std::optional<std::string> out_dir_;
    std::vector<std::pair<std::string, std::string>> outputs_;
};

NoiseSpec noise_for(const std::optional<double>& snr, std::uint64_t seed) {
    return snr ? NoiseSpec{*snr, seed} : NoiseSpec::noiseless();
}

class SynthCommand : public Command {
public:
    explicit SynthCommand(CLI::App& app)
        : Command(app.add_subcommand("synth", "Synthesize primal-domain signals for objects at given depths")) {
        auto* s = this->app();
        mode_.opt = s->add_option("--mode", mode_.value, "phase | fd | slow (default fd)");
        depths_.opt = s->add_option("--depth", depths_.value, "Object depths in meters")->delimiter(',');
        sweep_.opt = s->add_option("--sweep", sweep_.value, "f_min:f_max:n in Hz (fd, slow)");
        f_mod_.opt = s->add_option("--f-mod", f_mod_.value, "Modulation frequency in Hz (phase, default 50e6)");
        exposure_.opt = s->add_option("--exposure", exposure_.value, "Exposure in seconds (slow, default 1e-3)");
        amplitude_.opt = s->add_option("--amplitude", amplitude_.value, "Return amplitude (default 1)");
        ambient_.opt = s->add_option("--ambient", ambient_.value, "Ambient level (default 0)");
        snr_.opt = s->add_option("--snr", snr_.value, "SNR in dB; omit for noiseless");
    }

protected:
    std::vector<std::string> config_keys() const override {
        return {"mode", "depths_m", "sweep", "f_mod_hz", "exposure_s", "amplitude", "ambient", "snr_db"};
    }
    void resolve_options(ConfigResolver& cfg) override {
        mode = cfg.take<std::string>("mode", mode_, "fd");
        check_mode(mode);
        depths = cfg.take<std::vector<double>>("depths_m", depths_, {});
        if (depths.empty()) {
            throw UsageError("at least one --depth is required");
        }
        for (double d : depths) {
            if (!(d >= 0.0) || !std::isfinite(d)) {
                throw UsageError("depths must be finite and >= 0");
            }
        }
        sweep_text = cfg.take<std::string>("sweep", sweep_, mode == "slow" ? kSlowSweep : kFdSweep);
        f_mod = cfg.take<double>("f_mod_hz", f_mod_, 50e6);
        exposure = cfg.take<double>("exposure_s", exposure_, 1e-3);
        amplitude = cfg.take<double>("amplitude", amplitude_, 1.0);
        ambient = cfg.take<double>("ambient", ambient_, 0.0);
        snr = cfg.take_optional<double>("snr_db", snr_);
        sweep.emplace(parse_sweep(sweep_text));
        require_positive(f_mod, "f_mod_hz");
        require_positive(exposure, "exposure_s");
    }
    bool stochastic() const override { return snr.has_value(); }

    void execute(std::ostream&) override {
        std::vector<io::LabeledSignal> signals;
        for (std::size_t i = 0; i < depths.size(); ++i) {
            const auto point = ScenePoint::at_depth(depths[i], amplitude, ambient);
            PrimalSignal clean = mode == "phase" ? synth_phase_correlation(point, f_mod, four_bucket_shifts(f_mod))
                                 : mode == "fd"  ? synth_fd_sweep(point, *sweep)
                                                 : synth_slow_sweep(point, *sweep, exposure);
            signals.push_back({static_cast<std::int64_t>(i + 1),
                               add_noise(clean, noise_for(snr, derive_seed(seed.value_or(0), 0, i)))});
        }
        emit("signals.csv", io::encode_signal_csv(signals));
    }

private:
    Flag<std::string> mode_;
    Flag<std::vector<double>> depths_;
    Flag<std::string> sweep_;
    Flag<double> f_mod_, exposure_, amplitude_, ambient_, snr_;
    std::string mode, sweep_text;
    std::vector<double> depths;
    std::optional<FrequencySweep> sweep;
    double f_mod = 0, exposure = 0, amplitude = 0, ambient = 0;
    std::optional<double> snr;
};

class EstimateCommand : public Command {
public:
    explicit EstimateCommand(CLI::App& app)
        : Command(app.add_subcommand("estimate", "Estimate depth from a primal-signal CSV")) {
        auto* s = this->app();
        input_.opt = s->add_option("--input", input_.value, "Signal CSV written by synth");
        estimator_.opt = s->add_option("--estimator", estimator_.value, "four-bucket | interp | qf | slow");
        exposure_.opt = s->add_option("--exposure", exposure_.value, "Exposure in seconds (slow)");
        returns_.opt = s->add_option("--returns", returns_.value, "Returns to separate per object (interp/qf)");
    }

protected:
    std::vector<std::string> config_keys() const override {
        return {"input", "estimator", "exposure_s", "returns"};
    }
    void resolve_options(ConfigResolver& cfg) override {
        input = cfg.take<std::string>("input", input_, "");
        if (input.empty()) {
            throw UsageError("--input is required");
        }
        estimator_text = cfg.take<std::string>("estimator", estimator_, "");
        exposure = cfg.take_optional<double>("exposure_s", exposure_);
        returns = cfg.take<std::size_t>("returns", returns_, 1);
        if (returns == 0) {
            throw UsageError("--returns must be >= 1");
        }
        if (!estimator_text.empty()) {
            estimator = estimator_for(estimator_text);
        }
        if (estimator == Estimator::SlowTof && !exposure) {
            throw UsageError("--exposure is required for the slow estimator");
        }
        if (exposure) {
            require_positive(*exposure, "exposure_s");
        }
    }
    bool needs_out() const override { return false; }
    bool stochastic() const override { return false; }

    void execute(std::ostream& console) override {
        const auto signals = io::decode_signal_csv(io::read_file(input));
        const bool phase = signals.front().signal.domain() == PrimalDomain::PhaseShift;
        if (!estimator) {
            estimator = phase ? Estimator::FourBucket : Estimator::QuinnFernandes;
        }
        if (phase != (*estimator == Estimator::FourBucket)) {
            fail(ErrorKind::InvalidArgument, "estimator '" + estimator_name(*estimator) + "' cannot read " +
                                                 (phase ? "tau_s" : "frequency_hz") + " signals");
        }
        json objects = json::array();
        for (const auto& [id, signal] : signals) {
            try {
                objects.push_back(estimate_one(id, signal));
            } catch (const Error& e) {
                throw Error(e.kind(), "object " + std::to_string(id) + ": " + e.what());
            }
        }
        const json result = {{"estimator", estimator_name(*estimator)}, {"objects", objects}};
        console << dump(result);
        emit("result.json", dump(result));
    }

private:
    json estimate_one(std::int64_t id, const PrimalSignal& signal) {
        json out = {{"object_id", id}};
        switch (*estimator) {
        case Estimator::FourBucket: {
            const auto c = signal.samples();
            require(c.size() == 4, "four-bucket needs exactly 4 samples per object");
            const double f_mod = 1.0 / (4.0 * signal.spacing());
            const auto phasor = four_bucket(c[0], c[1], c[2], c[3]);
            const auto est = phase_to_depth(phasor, f_mod);
            out.update({{"depth_m", est.depth},
                        {"amplitude", est.amplitude},
                        {"phase_rad", phasor.phase},
                        {"f_mod_hz", f_mod},
                        {"ambiguity_distance_m", ambiguity_distance(f_mod)},
                        {"confidence", est.confidence}});
            return out;
        }
        case Estimator::InterpPeriodogram:
        case Estimator::QuinnFernandes: {
            if (returns > 1) {
                json peaks = json::array();
                for (const auto& p : separate_multipath(signal, returns)) {
                    peaks.push_back(peak_json(p));
                }
                out["returns"] = peaks;
                return out;
            }
            const auto p = *estimator == Estimator::QuinnFernandes ? estimate_tone_qf(signal) : estimate_tone_interp(signal);
            out.update(peak_json(p));
            return out;
        }
        case Estimator::SlowTof: {
            const auto x = signal.coordinates();
            const SlowCaptureConfig cfg(*exposure, FrequencySweep(x.front(), x.back(), x.size()));
            const auto a = analyze_slow_capture(signal, cfg);
            out.update(peak_json(a.peak));
            out["exposure_tone_in_band"] = a.exposure_tone_in_band;
            out["exposure_tone_alias_s"] = a.exposure_tone_alias;
            out["exposure_tone_delay_s"] = a.exposure_tone_delay ? json(*a.exposure_tone_delay) : json(nullptr);
            return out;
        }
        }
        return out;
    }

    Flag<std::string> input_, estimator_;
    Flag<double> exposure_;
    Flag<std::size_t> returns_;
    std::string input, estimator_text;
    std::optional<Estimator> estimator;
    std::optional<double> exposure;
    std::size_t returns = 1;
};

class CompareCommand : public Command {
public:
    explicit CompareCommand(CLI::App& app)
        : Command(app.add_subcommand("compare", "Monte Carlo depth error of phase vs frequency-swept capture")) {
        auto* s = this->app();
        depth_.opt = s->add_option("--depth", depth_.value, "Object depth in meters (default 1)");
        snr_.opt = s->add_option("--snr", snr_.value, "SNR levels in dB (default 1,5,10,20,30)")->delimiter(',');
        trials_.opt = s->add_option("--trials", trials_.value, "Trials per level and arm (default 1000)");
        f_mod_.opt = s->add_option("--f-mod", f_mod_.value, "Phase-arm modulation frequency in Hz (default 50e6)");
        sweep_.opt = s->add_option("--sweep", sweep_.value, "Frequency-arm sweep f_min:f_max:n");
        estimator_.opt = s->add_option("--estimator", estimator_.value, "Frequency-arm estimator: qf | interp");
    }

protected:
    std::vector<std::string> config_keys() const override {
        return {"depth_m", "snr_db", "trials", "f_mod_hz", "sweep", "estimator"};
    }
    void resolve_options(ConfigResolver& cfg) override {
        depth = cfg.take<double>("depth_m", depth_, 1.0);
        require_positive(depth, "depth_m");
        levels = cfg.take<std::vector<double>>("snr_db", snr_, {1, 5, 10, 20, 30});
        if (levels.empty()) {
            throw UsageError("at least one SNR level is required");
        }
        trials = cfg.take<std::size_t>("trials", trials_, 1000);
        if (trials == 0) {
            throw UsageError("--trials must be >= 1");
        }
        phase.f_mod = cfg.take<double>("f_mod_hz", f_mod_, 50e6);
        require_positive(phase.f_mod, "f_mod_hz");
        fd.sweep = parse_sweep(cfg.take<std::string>("sweep", sweep_, kFdSweep));
        fd.estimator = estimator_for(cfg.take<std::string>("estimator", estimator_, "qf"));
        if (fd.estimator != Estimator::QuinnFernandes && fd.estimator != Estimator::InterpPeriodogram) {
            throw UsageError("frequency-arm estimator must be qf or interp");
        }
    }
    bool stochastic() const override { return true; }

    void execute(std::ostream& console) override {
        const auto report = snr_sweep_experiment(depth, levels, trials, phase, fd, *seed);
        std::string csv = "estimator,snr_db,trials,failures,median_percent_error,mean_percent_error,rmse_m\n";
        json rows = json::array();
        for (const auto& r : report.rows) {
            csv += r.estimator + "," + io::format_double(r.snr_db) + "," + std::to_string(r.trials) + "," +
                   std::to_string(r.failures) + "," + io::format_double(r.median_percent) + "," +
                   io::format_double(r.mean_percent) + "," + io::format_double(r.rmse) + "\n";
            rows.push_back({{"estimator", r.estimator},
                            {"snr_db", r.snr_db},
                            {"trials", r.trials},
                            {"failures", r.failures},
                            {"median_percent_error", db_json(r.median_percent)},
                            {"mean_percent_error", r.mean_percent},
                            {"rmse_m", r.rmse}});
        }
        emit("report.csv", csv);
        emit("report.json", dump({{"depth_m", depth}, {"rows", rows}}));
        console << csv;
    }

private:
    Flag<double> depth_, f_mod_;
    Flag<std::vector<double>> snr_;
    Flag<std::size_t> trials_;
    Flag<std::string> sweep_, estimator_;
    double depth = 1.0;
    std::vector<double> levels;
    std::size_t trials = 0;
    PhaseArmConfig phase;
    FdArmConfig fd;
};

class SceneCommand : public Command {
public:
    explicit SceneCommand(CLI::App& app)
        : Command(app.add_subcommand("scene", "Simulate a depth camera over a scene and reconstruct it")) {
        auto* s = this->app();
        scene_.opt = s->add_option("--scene", scene_.value, "Scene JSON file");
        truth_.opt = s->add_option("--truth", truth_.value, "Ground-truth depth map, 16-bit PGM (1 mm per level)");
        kind_.opt = s->add_option("--kind", kind_.value, "Procedural scene: composite | ramp | uniform");
        width_.opt = s->add_option("--width", width_.value, "Procedural scene width (default 64)");
        height_.opt = s->add_option("--height", height_.value, "Procedural scene height (default 64)");
        min_depth_.opt = s->add_option("--min-depth", min_depth_.value, "Procedural near depth, m (default 0.5)");
        max_depth_.opt = s->add_option("--max-depth", max_depth_.value, "Procedural far depth, m (default 3)");
        multipath_.opt = s->add_option("--multipath-fraction", multipath_.value, "Pixels with a second return");
        mode_.opt = s->add_option("--mode", mode_.value, "phase | fd | slow (default fd)");
        sweep_.opt = s->add_option("--sweep", sweep_.value, "f_min:f_max:n in Hz (fd, slow)");
        f_mod_.opt = s->add_option("--f-mod", f_mod_.value, "Modulation frequency in Hz (phase, default 50e6)");
        exposure_.opt = s->add_option("--exposure", exposure_.value, "Exposure in seconds (slow, default 1e-3)");
        snr_.opt = s->add_option("--snr", snr_.value, "SNR in dB (default 20)");
        estimator_.opt = s->add_option("--estimator", estimator_.value, "four-bucket | interp | qf | slow");
    }

protected:
    std::vector<std::string> config_keys() const override {
        return {"scene_file", "truth_pgm", "kind", "width", "height", "min_depth_m", "max_depth_m", "multipath_fraction",
                "mode", "sweep", "f_mod_hz", "exposure_s", "snr_db", "estimator"};
    }
    void resolve_options(ConfigResolver& cfg) override {
        scene_file = cfg.take_optional<std::string>("scene_file", scene_);
        truth_file = cfg.take_optional<std::string>("truth_pgm", truth_);
        if (scene_file && truth_file) {
            throw UsageError("give either --scene or --truth, not both");
        }
        try {
            procedural.kind = io::parse_procedural_kind(cfg.take<std::string>("kind", kind_, "composite"));
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        procedural.width = cfg.take<std::size_t>("width", width_, 64);
        procedural.height = cfg.take<std::size_t>("height", height_, 64);
        procedural.min_depth = cfg.take<double>("min_depth_m", min_depth_, 0.5);
        procedural.max_depth = cfg.take<double>("max_depth_m", max_depth_, 3.0);
        procedural.multipath_fraction = cfg.take<double>("multipath_fraction", multipath_, 0.0);
        if (procedural.width == 0 || procedural.height == 0 || !(procedural.min_depth > 0.0) ||
            !(procedural.max_depth >= procedural.min_depth) || !(procedural.multipath_fraction >= 0.0) ||
            procedural.multipath_fraction > 1.0) {
            throw UsageError("invalid procedural scene parameters");
        }
        const std::string mode_text = cfg.take<std::string>("mode", mode_, "fd");
        check_mode(mode_text);
        const std::string sweep_text = cfg.take<std::string>("sweep", sweep_, mode_text == "slow" ? kSlowSweep : kFdSweep);
        const double f_mod = cfg.take<double>("f_mod_hz", f_mod_, 50e6);
        const double exposure = cfg.take<double>("exposure_s", exposure_, 1e-3);
        require_positive(f_mod, "f_mod_hz");
        require_positive(exposure, "exposure_s");
        const auto sweep = parse_sweep(sweep_text);
        mode = mode_text == "phase" ? CaptureMode{PhaseTofMode{f_mod}}
               : mode_text == "fd"  ? CaptureMode{FdTofMode{sweep}}
                                    : CaptureMode{SlowTofMode{sweep, exposure}};
        snr = cfg.take<double>("snr_db", snr_, 20.0);
        estimator = estimator_for(cfg.take<std::string>("estimator", estimator_, estimator_name(default_estimator(mode_text))));
        const bool ok = estimator == default_estimator(mode_text) ||
                        (mode_text == "fd" && estimator == Estimator::InterpPeriodogram);
        if (!ok) {
            throw UsageError("estimator '" + estimator_name(estimator) + "' does not match mode '" + mode_text + "'");
        }
    }
    bool stochastic() const override { return true; }

    void execute(std::ostream& console) override {
        const SceneSpec scene = load_scene();
        const auto truth = DepthMap::truth_of(scene);
        const auto map = reconstruct(simulate_capture(scene, mode, NoiseSpec{snr, *seed}), estimator);
        const auto stats = depth_error_stats(map, truth);

        json metrics = {{"width", map.width},
                        {"height", map.height},
                        {"mode", mode_name(mode)},
                        {"estimator", estimator_name(estimator)},
                        {"snr_db", snr},
                        {"valid_pixels", stats.valid},
                        {"invalid_pixels", stats.invalid},
                        {"median_percent_error", stats.median_percent},
                        {"mean_percent_error", stats.mean_percent},
                        {"rmse_m", stats.rmse},
                        {"fraction_within_1_percent", stats.fraction_within_1_percent},
                        {"histogram", {{"edges_percent", stats.histogram_edges}, {"counts", stats.histogram}}}};
        metrics["psnr_db"] = map.valid_count() > 0 ? db_json(psnr(map, truth)) : json(nullptr);
        metrics["baseline_psnr_db"] = db_json(psnr(mean_depth_baseline(truth), truth));

        emit("depth.pgm", io::encode_pgm(io::depth_map_to_pgm(map)));
        emit("amplitude.pgm", io::encode_pgm(io::amplitude_map_to_pgm(map)));
        emit("truth.pgm", io::encode_pgm(io::depth_map_to_pgm(truth)));
        emit("metrics.json", dump(metrics));
        console << dump(metrics);
    }

private:
    SceneSpec load_scene() const {
        if (scene_file) {
            return io::decode_scene_json(io::read_file(*scene_file));
        }
        if (truth_file) {
            const auto map = io::depth_map_from_pgm(io::decode_pgm(io::read_file(*truth_file)));
            for (std::size_t i = 0; i < map.size(); ++i) {
                if (!map.valid[i] || !(map.depth[i] > 0.0)) {
                    fail(ErrorKind::Parse, *truth_file + ": pixel " + std::to_string(i) +
                                               " has no usable depth (invalid sentinel or zero)");
                }
            }
            return SceneSpec::from_depths(map.width, map.height, map.depth, map.amplitude);
        }
        return make_procedural_scene(procedural);
    }

    Flag<std::string> scene_, truth_, kind_, mode_, sweep_, estimator_;
    Flag<std::size_t> width_, height_;
    Flag<double> min_depth_, max_depth_, multipath_, f_mod_, exposure_, snr_;
    std::optional<std::string> scene_file, truth_file;
    ProceduralSceneOptions procedural;
    CaptureMode mode = PhaseTofMode{50e6};
    double snr = 20.0;
    Estimator estimator = Estimator::QuinnFernandes;
};

class ResolveCommand : public Command {
public:
    explicit ResolveCommand(CLI::App& app)
        : Command(app.add_subcommand("resolve", "Axial resolution bound and measured two-path merge threshold")) {
        auto* s = this->app();
        sweep_.opt = s->add_option("--sweep", sweep_.value, "f_min:f_max:n in Hz (default 10e6:110e6:128)");
        placements_.opt = s->add_option("--placements", placements_.value, "Relative phases tried per separation");
    }

protected:
    std::vector<std::string> config_keys() const override {
        return {"sweep", "placements"};
    }
    void resolve_options(ConfigResolver& cfg) override {
        sweep.emplace(parse_sweep(cfg.take<std::string>("sweep", sweep_, "10e6:110e6:128")));
        opts.placements = cfg.take<std::size_t>("placements", placements_, opts.placements);
        if (opts.placements == 0) {
            throw UsageError("--placements must be >= 1");
        }
    }
    bool stochastic() const override { return false; }

    void execute(std::ostream& console) override {
        const auto rep = resolution_experiment(sweep->f_min(), sweep->bandwidth(), sweep->size(), opts);
        std::string csv = "separation_m,separation_over_bound,resolved\n";
        for (const auto& [sep, ok] : rep.scan) {
            csv += io::format_double(sep) + "," + io::format_double(sep / rep.bound) + "," + (ok ? "1" : "0") + "\n";
        }
        const json result = {{"sweep", format_sweep(*sweep)},
                             {"bandwidth_hz", rep.bandwidth},
                             {"bound_m", rep.bound},
                             {"empirical_threshold_m", rep.empirical_threshold},
                             {"threshold_over_bound", rep.ratio}};
        emit("resolution.json", dump(result));
        emit("resolution.csv", csv);
        console << dump(result);
    }

private:
    Flag<std::string> sweep_;
    Flag<std::size_t> placements_;
    std::optional<FrequencySweep> sweep;
    ResolutionOptions opts;
};

class SlowTofCommand : public Command {
public:
    explicit SlowTofCommand(CLI::App& app)
        : Command(app.add_subcommand("slowtof", "Slow (integrating) camera sweep: signals, depths, amplitude decay")) {
        auto* s = this->app();
        depths_.opt = s->add_option("--depth", depths_.value, "Object depths in meters (default 1,2,3)")->delimiter(',');
        sweep_.opt = s->add_option("--sweep", sweep_.value, "f_min:f_max:n in Hz (default 10e6:1e9:4096)");
        exposure_.opt = s->add_option("--exposure", exposure_.value, "Exposure in seconds (default 1e-3)");
        ambient_.opt = s->add_option("--ambient", ambient_.value, "Ambient level (default 0)");
        snr_.opt = s->add_option("--snr", snr_.value, "SNR in dB; omit for noiseless");
    }

protected:
    std::vector<std::string> config_keys() const override {
        return {"depths_m", "sweep", "exposure_s", "ambient", "snr_db"};
    }
    void resolve_options(ConfigResolver& cfg) override {
        depths = cfg.take<std::vector<double>>("depths_m", depths_, {1.0, 2.0, 3.0});
        if (depths.empty()) {
            throw UsageError("at least one --depth is required");
        }
        for (double d : depths) {
            if (!(d >= 0.0) || !std::isfinite(d)) {
                throw UsageError("depths must be finite and >= 0");
            }
        }
        sweep.emplace(parse_sweep(cfg.take<std::string>("sweep", sweep_, kSlowSweep)));
        exposure = cfg.take<double>("exposure_s", exposure_, 1e-3);
        require_positive(exposure, "exposure_s");
        ambient = cfg.take<double>("ambient", ambient_, 0.0);
        snr = cfg.take_optional<double>("snr_db", snr_);
    }
    bool stochastic() const override { return snr.has_value(); }

    void execute(std::ostream& console) override {
        const SlowCaptureConfig capture(exposure, *sweep);
        std::vector<io::LabeledSignal> signals;
        json objects = json::array();
        for (std::size_t i = 0; i < depths.size(); ++i) {
            const auto id = static_cast<std::int64_t>(i + 1);
            const auto clean = synth_slow_sweep(ScenePoint::at_depth(depths[i], 1.0, ambient), *sweep, exposure);
            const auto s = add_noise(clean, noise_for(snr, derive_seed(seed.value_or(0), 0, i)));
            signals.push_back({id, s});
            json obj = {{"object_id", id}, {"true_depth_m", depths[i]}};
            try {
                const auto a = analyze_slow_capture(s, capture);
                obj.update(peak_json(a.peak));
                obj["error_m"] = a.peak.depth - depths[i];
                obj["exposure_tone_in_band"] = a.exposure_tone_in_band;
                obj["exposure_tone_alias_s"] = a.exposure_tone_alias;
                obj["exposure_tone_delay_s"] = a.exposure_tone_delay ? json(*a.exposure_tone_delay) : json(nullptr);
            } catch (const Error& e) {
                obj["error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
            }
            try {
                obj["decay_exponent"] = verify_amplitude_decay(s);
            } catch (const Error& e) {
                obj["decay_exponent"] = nullptr;
                obj["decay_error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
            }
            objects.push_back(obj);
        }
        const json result = {{"exposure_s", exposure}, {"sweep", format_sweep(*sweep)}, {"objects", objects}};
        emit("signals.csv", io::encode_signal_csv(signals));
        emit("slowtof.json", dump(result));
        console << dump(result);
    }

private:
    Flag<std::vector<double>> depths_;
    Flag<std::string> sweep_;
    Flag<double> exposure_, ambient_, snr_;
    std::vector<double> depths;
    std::optional<FrequencySweep> sweep;
    double exposure = 1e-3, ambient = 0.0;
    std::optional<double> snr;
};

void report_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Frequency-domain time-of-flight simulator and depth estimator"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "JSON config; command-line flags take precedence");

    std::vector<std::unique_ptr<Command>> commands;
    commands.push_back(std::make_unique<SynthCommand>(app));
    commands.push_back(std::make_unique<EstimateCommand>(app));
    commands.push_back(std::make_unique<CompareCommand>(app));
    commands.push_back(std::make_unique<SceneCommand>(app));
    commands.push_back(std::make_unique<ResolveCommand>(app));
    commands.push_back(std::make_unique<SlowTofCommand>(app));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        report_error("usage", e.what());
        std::cerr << "run with --help for usage\n";
        return 2;
    }

    Command* cmd = nullptr;
    for (auto& c : commands) {
        if (c->selected()) {
            cmd = c.get();
        }
    }

    json resolved;
    try {
        json file = json::object();
        if (!config_path.empty()) {
            try {
                file = json::parse(io::read_file(config_path));
            } catch (const json::parse_error& e) {
                throw UsageError("config " + config_path + ": parse error at byte " + std::to_string(e.byte));
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
        }
        ConfigResolver cfg(std::move(file));
        cmd->resolve(cfg);
        resolved = cfg.resolved();
    } catch (const UsageError& e) {
        report_error("usage", e.what());
        return 2;
    } catch (const Error& e) {
        report_error("usage", e.what());
        return 2;
    }

    try {
        cmd->run(resolved, std::cout);
    } catch (const Error& e) {
        report_error(std::string(to_string(e.kind())), e.what());
        return 1;
    } catch (const std::exception& e) {
        report_error("internal", e.what());
        return 1;
    }
    return 0;
}

} // namespace fdtof::cli

int main(int argc, char** argv) { return fdtof::cli::run_cli(argc, argv); }
