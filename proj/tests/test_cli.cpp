// End-to-end checks of the fdtof executable.
#include "fdtof/io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <map>
#include <filesystem>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fdtof;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("fdtof_cli_" + std::to_string(::getpid()) + "_" +
               ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    CliResult run(const std::string& args) const {
        const auto out = dir / "stdout.txt";
        const auto err = dir / "stderr.txt";
        const std::string cmd = "cd '" + dir.string() + "' && '" FDTOF_CLI "' " + args + " > '" + out.string() +
                                "' 2> '" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        CliResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = io::read_file(out);
        r.err = io::read_file(err);
        return r;
    }

    json read_json(const std::string& rel) const { return json::parse(io::read_file(dir / rel)); }
    std::string read(const std::string& rel) const { return io::read_file(dir / rel); }

    fs::path dir;
};

std::size_t zero_crossings(std::span<const double> x) {
    double mean = 0.0;
    for (double v : x) {
        mean += v / static_cast<double>(x.size());
    }
    std::size_t n = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        n += (x[i - 1] < mean) != (x[i] < mean);
    }
    return n;
}

} // namespace

TEST_F(Cli, SynthThreeObjectsCycleRatio) {
    const auto r = run("synth --mode fd --depth 1,2,3 --sweep 10e6:1e9:256 --out s");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto signals = io::decode_signal_csv(read("s/signals.csv"));
    ASSERT_EQ(signals.size(), 3u);
    const double z1 = static_cast<double>(zero_crossings(signals[0].signal.samples()));
    EXPECT_NEAR(zero_crossings(signals[1].signal.samples()) / z1, 2.0, 0.1);
    EXPECT_NEAR(zero_crossings(signals[2].signal.samples()) / z1, 3.0, 0.15);
    EXPECT_EQ(read_json("s/config.json")["command"], "synth");
}

TEST_F(Cli, SynthUsageErrors) {
    auto r = run("synth --out s");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(json::parse(r.err.substr(0, r.err.find('\n')))["error"]["kind"], "usage");
    EXPECT_FALSE(fs::exists(dir / "s"));
    EXPECT_EQ(run("synth --depth 1 --snr 10 --out s").code, 2);  // noisy without a seed
    EXPECT_EQ(run("synth --depth 1 --mode radar --out s").code, 2);
    EXPECT_EQ(run("synth --depth 1 --sweep 1e9:1e8:10 --out s").code, 2);
    EXPECT_EQ(run("synth --depth 1").code, 2);  // no --out
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("").code, 2);
}

TEST_F(Cli, SynthIsDeterministic) {
    ASSERT_EQ(run("synth --depth 1,2 --snr 5 --seed 11 --out a").code, 0);
    ASSERT_EQ(run("synth --depth 1,2 --snr 5 --seed 11 --out b").code, 0);
    EXPECT_EQ(read("a/signals.csv"), read("b/signals.csv"));
    ASSERT_EQ(run("synth --depth 1,2 --snr 5 --seed 12 --out c").code, 0);
    EXPECT_NE(read("a/signals.csv"), read("c/signals.csv"));
}

TEST_F(Cli, EstimateRoundTripPerMode) {
    ASSERT_EQ(run("synth --mode phase --depth 1.3 --f-mod 50e6 --out p").code, 0);
    auto r = run("estimate --input p/signals.csv");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(json::parse(r.out)["objects"][0]["depth_m"].get<double>(), 1.3, 1e-9);

    ASSERT_EQ(run("synth --mode fd --depth 1,2.5 --out f").code, 0);
    r = run("estimate --input f/signals.csv --estimator qf --out fe");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto fd = read_json("fe/result.json");
    EXPECT_EQ(fd["estimator"], "qf");
    EXPECT_NEAR(fd["objects"][0]["depth_m"].get<double>(), 1.0, 1e-3);
    EXPECT_NEAR(fd["objects"][1]["depth_m"].get<double>(), 2.5, 1e-3);

    ASSERT_EQ(run("synth --mode slow --depth 2 --exposure 1e-3 --out w").code, 0);
    r = run("estimate --input w/signals.csv --estimator slow --exposure 1e-3");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(json::parse(r.out)["objects"][0]["depth_m"].get<double>(), 2.0, 0.05);
}

TEST_F(Cli, EstimateSeparatesReturns) {
    io::write_file_atomic(dir / "two.csv",
                          io::encode_signal_csv({{1, synth_fd_sweep(ScenePoint({{1.0, 2.0}, {0.7, 10.0}}),
                                                                    FrequencySweep(10e6, 1e9, 256))}}));
    const auto r = run("estimate --input two.csv --estimator interp --returns 2");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto returns = json::parse(r.out)["objects"][0]["returns"];
    ASSERT_EQ(returns.size(), 2u);
    EXPECT_NEAR(returns[0]["depth_m"].get<double>(), 1.0, 0.02);
    EXPECT_NEAR(returns[1]["depth_m"].get<double>(), 5.0, 0.02);
}

TEST_F(Cli, EstimateGuardViolationIsStructured) {
    ASSERT_EQ(run("synth --mode fd --depth 1 --sweep 10e6:30e6:64 --out n").code, 0);
    const auto r = run("estimate --input n/signals.csv");
    EXPECT_EQ(r.code, 1);
    const auto err = json::parse(r.err.substr(0, r.err.find('\n')));
    EXPECT_EQ(err["error"]["kind"], "insufficient_bandwidth");

    EXPECT_EQ(run("estimate --input n/signals.csv --estimator four-bucket").code, 1);
    EXPECT_EQ(run("estimate --input n/signals.csv --estimator slow").code, 2);  // needs --exposure
    EXPECT_EQ(run("estimate").code, 2);
    const auto missing = run("estimate --input nowhere.csv");
    EXPECT_EQ(missing.code, 1);
    EXPECT_NE(missing.err.find("\"io_error\""), std::string::npos) << missing.err;
}

TEST_F(Cli, CompareReport) {
    const auto r = run("compare --snr 1,5,10,20,30 --trials 1000 --seed 2024 --out c");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = read_json("c/report.json");
    std::map<std::string, std::vector<double>> medians;
    for (const auto& row : report["rows"]) {
        medians[row["estimator"]].push_back(row["median_percent_error"].get<double>());
    }
    ASSERT_EQ(medians.size(), 2u);
    for (const auto& [name, m] : medians) {
        ASSERT_EQ(m.size(), 5u);
        for (std::size_t i = 1; i < m.size(); ++i) {
            EXPECT_LE(m[i], m[i - 1]) << name;
        }
    }
    EXPECT_LE(medians["qf"][0], medians["four-bucket"][0]);
    EXPECT_EQ(read("c/report.csv").substr(0, read("c/report.csv").find('\n')),
              "estimator,snr_db,trials,failures,median_percent_error,mean_percent_error,rmse_m");
}

TEST_F(Cli, CompareUsageAndReproducibility) {
    EXPECT_EQ(run("compare --trials 0 --seed 1 --out c").code, 2);
    EXPECT_EQ(run("compare --trials 10 --out c").code, 2);  // no seed
    ASSERT_EQ(run("compare --trials 50 --snr 3 --seed 9 --out a").code, 0);
    ASSERT_EQ(run("compare --trials 50 --snr 3 --seed 9 --out b").code, 0);
    EXPECT_EQ(read("a/report.csv"), read("b/report.csv"));
    EXPECT_EQ(read("a/report.json"), read("b/report.json"));
}

TEST_F(Cli, SceneUniformIdentity) {
    const auto r = run("scene --kind uniform --min-depth 1 --width 8 --height 8 --snr 60 --seed 1 --out u");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto depth = io::depth_map_from_pgm(io::decode_pgm(read("u/depth.pgm")));
    for (double d : depth.depth) {
        EXPECT_NEAR(d, 1.0, 1e-3);
    }
    EXPECT_EQ(read("u/depth.pgm"), read("u/truth.pgm"));
}

TEST_F(Cli, SceneRampAtTwentyDb) {
    const auto r = run("scene --kind ramp --width 64 --height 64 --snr 20 --seed 5 --out r");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = read_json("r/metrics.json");
    EXPECT_GE(m["fraction_within_1_percent"].get<double>(), 0.99);
    EXPECT_TRUE(m["psnr_db"].is_number());
    EXPECT_GT(m["psnr_db"].get<double>(), m["baseline_psnr_db"].get<double>());
    EXPECT_EQ(m["histogram"]["counts"].size(), m["histogram"]["edges_percent"].size());
    const auto amp = io::decode_pgm(read("r/amplitude.pgm"));
    EXPECT_EQ(amp.width, 64u);
}

TEST_F(Cli, SceneFromTruthPgmAndJson) {
    ASSERT_EQ(run("scene --kind composite --width 16 --height 12 --seed 1 --out a").code, 0);
    auto r = run("scene --truth a/truth.pgm --seed 1 --snr 30 --out b");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read("a/truth.pgm"), read("b/truth.pgm"));

    io::write_file_atomic(dir / "scene.json", R"({"width": 2, "height": 1, "depth_m": [1.0, 2.0]})");
    r = run("scene --scene scene.json --seed 1 --out j");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_json("j/metrics.json")["width"], 2);
}

TEST_F(Cli, SceneParseErrors) {
    io::write_file_atomic(dir / "bad.pgm", std::string("P5\n2 2\n65535\n") + std::string(5, '\0'));
    auto r = run("scene --truth bad.pgm --seed 1 --out x");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("\"parse_error\""), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("byte 18"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "x" / "config.json"));

    io::write_file_atomic(dir / "bad.json", R"({"width": 2, "height": 1, "depth_m": [1.0, "far"]})");
    r = run("scene --scene bad.json --seed 1 --out x");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("depth_m"), std::string::npos) << r.err;

    EXPECT_EQ(run("scene --mode phase --estimator qf --seed 1 --out x").code, 2);
    EXPECT_EQ(run("scene --out x").code, 2);  // stochastic, no seed
}

TEST_F(Cli, ResolveBoundAndThreshold) {
    const auto r = run("resolve --sweep 10e6:110e6:128 --out r");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = read_json("r/resolution.json");
    EXPECT_NEAR(j["bound_m"].get<double>(), 3.6, 0.05);
    EXPECT_NEAR(j["threshold_over_bound"].get<double>(), 1.0, 0.2);
    EXPECT_EQ(run("resolve --sweep 10e6:10e6:128 --out z").code, 2);
}

TEST_F(Cli, SlowTofDepthsAndDecay) {
    const auto r = run("slowtof --depth 1,2,3 --out w");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = read_json("w/slowtof.json");
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& o = j["objects"][i];
        EXPECT_NEAR(o["depth_m"].get<double>(), o["true_depth_m"].get<double>(), 0.05);
        EXPECT_NEAR(o["decay_exponent"].get<double>(), -1.0, 0.05);
    }
    EXPECT_EQ(io::decode_signal_csv(read("w/signals.csv")).size(), 3u);
}

TEST_F(Cli, ConfigFileFlagsWinAndReplayMatches) {
    io::write_file_atomic(dir / "cfg.json", R"({"command": "synth", "mode": "fd", "depths_m": [1.5], "sweep": "10e6:1e9:128"})");
    ASSERT_EQ(run("--config cfg.json synth --out a").code, 0);
    EXPECT_EQ(io::decode_signal_csv(read("a/signals.csv"))[0].signal.size(), 128u);

    ASSERT_EQ(run("synth --config cfg.json --sweep 10e6:1e9:64 --out b").code, 0);
    EXPECT_EQ(io::decode_signal_csv(read("b/signals.csv"))[0].signal.size(), 64u);
    EXPECT_EQ(read_json("b/config.json")["sweep"], "10e6:1e9:64");

    // The written config replays to identical outputs.
    ASSERT_EQ(run("synth --config b/config.json --out c").code, 0);
    EXPECT_EQ(read("b/signals.csv"), read("c/signals.csv"));

    io::write_file_atomic(dir / "typo.json", R"({"depths": [1.0]})");
    const auto r = run("synth --config typo.json --out d");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("'depths'"), std::string::npos) << r.err;

    io::write_file_atomic(dir / "wrong.json", R"({"command": "resolve"})");
    EXPECT_EQ(run("synth --config wrong.json --depth 1 --out e").code, 2);
    io::write_file_atomic(dir / "broken.json", "{\"mode\": ");
    EXPECT_EQ(run("synth --config broken.json --depth 1 --out e").code, 2);
}

TEST_F(Cli, UnwritableOutputFails) {
    io::write_file_atomic(dir / "blocker", "not a directory");
    const auto r = run("synth --depth 1 --out blocker/sub");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("\"io_error\""), std::string::npos) << r.err;
}
