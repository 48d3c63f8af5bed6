#include "fdtof/error.hpp"
#include "fdtof/scene_sim.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <set>

using namespace fdtof;

namespace {

const FrequencySweep kSweep(10e6, 1e9, 256);

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

DepthMap constant_map(std::size_t w, std::size_t h, double depth) {
    DepthMap m(w, h);
    std::fill(m.depth.begin(), m.depth.end(), depth);
    std::fill(m.valid.begin(), m.valid.end(), 1);
    return m;
}

ProceduralSceneOptions small(ProceduralKind kind, std::size_t w = 12, std::size_t h = 9) {
    ProceduralSceneOptions o;
    o.kind = kind;
    o.width = w;
    o.height = h;
    return o;
}

} // namespace

TEST(SceneSpec, Validation) {
    EXPECT_THROW(SceneSpec(0, 1, {}), Error);
    EXPECT_THROW(SceneSpec(2, 2, {ScenePoint::at_depth(1.0)}), Error);
    const std::vector<double> d{1, 2, 3, 4}, a{1, 1, 1, 1};
    const auto s = SceneSpec::from_depths(2, 2, d, a);
    EXPECT_EQ(s.at(1, 0).paths()[0].path_length, 6.0);
    EXPECT_THROW(SceneSpec::from_depths(2, 2, std::vector<double>{1, 2}, a), Error);
}

TEST(ProceduralScene, DepthRangeAndShapes) {
    for (auto kind : {ProceduralKind::Uniform, ProceduralKind::Ramp, ProceduralKind::Composite}) {
        const auto truth = DepthMap::truth_of(make_procedural_scene(small(kind, 64, 64)));
        const auto [lo, hi] = std::minmax_element(truth.depth.begin(), truth.depth.end());
        EXPECT_GE(*lo, 0.5);
        EXPECT_LE(*hi, 3.0);
        if (kind == ProceduralKind::Uniform) {
            EXPECT_EQ(*lo, *hi);
        } else {
            EXPECT_GT(*hi - *lo, 1.0);
        }
    }
}

TEST(ProceduralScene, MultipathFractionAddsSecondReturns) {
    auto o = small(ProceduralKind::Composite, 32, 32);
    o.multipath_fraction = 0.25;
    const auto scene = make_procedural_scene(o);
    std::size_t two = 0;
    for (const auto& p : scene.pixels()) {
        ASSERT_GE(p.paths().size(), 1u);
        two += p.paths().size() == 2;
    }
    EXPECT_NEAR(static_cast<double>(two) / scene.size(), 0.25, 0.03);
}

TEST(DeriveSeed, DistinctPerPixelAndStable) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t r = 0; r < 64; ++r) {
        for (std::uint64_t c = 0; c < 64; ++c) {
            seen.insert(derive_seed(9, r, c));
        }
    }
    EXPECT_EQ(seen.size(), 64u * 64u);
    EXPECT_NE(derive_seed(9, 1, 2), derive_seed(9, 2, 1));
    EXPECT_NE(derive_seed(9, 1, 2), derive_seed(10, 1, 2));
    // Reference values of the documented mixing function.
    EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFull);
    EXPECT_EQ(derive_seed(0, 0, 0), splitmix64(splitmix64(0)));
}

TEST(SimulateCapture, OnePixelMatchesTheSynthesizer) {
    const auto point = ScenePoint({{0.7, 3.1}, {0.2, 8.0}}, 0.1);
    const SceneSpec scene(1, 1, {point});
    const NoiseSpec noise{15.0, 77};

    EXPECT_EQ(simulate_capture(scene, FdTofMode{kSweep}, noise).pixels[0],
              add_noise(synth_fd_sweep(point, kSweep), {15.0, derive_seed(77, 0, 0)}));
    EXPECT_EQ(simulate_capture(scene, PhaseTofMode{30e6}, noise).pixels[0],
              add_noise(synth_phase_correlation(point, 30e6, four_bucket_shifts(30e6)), {15.0, derive_seed(77, 0, 0)}));
    EXPECT_EQ(simulate_capture(scene, SlowTofMode{kSweep, 1e-3}, NoiseSpec::noiseless()).pixels[0],
              synth_slow_sweep(point, kSweep, 1e-3));
}

TEST(SimulateCapture, UniformSceneGivesIdenticalCleanPixels) {
    const auto cube = simulate_capture(make_procedural_scene(small(ProceduralKind::Uniform)), FdTofMode{kSweep},
                                       NoiseSpec::noiseless());
    for (const auto& p : cube.pixels) {
        EXPECT_EQ(p, cube.pixels.front());
    }
    const auto noisy = simulate_capture(make_procedural_scene(small(ProceduralKind::Uniform)), FdTofMode{kSweep},
                                        NoiseSpec{10.0, 1});
    EXPECT_NE(noisy.pixels[0], noisy.pixels[1]);
}

TEST(SimulateCapture, ErrorsCarryPixelContext) {
    // A zero-length path leaves a flat sweep: no AC power to scale noise against.
    std::vector<ScenePoint> pixels(4, ScenePoint::at_depth(1.0));
    pixels[3] = ScenePoint({{1.0, 0.0}});
    const SceneSpec scene(2, 2, pixels);
    try {
        simulate_capture(scene, FdTofMode{kSweep}, NoiseSpec{10.0, 1});
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateSignal);
        EXPECT_NE(std::string(e.what()).find("(1, 1)"), std::string::npos) << e.what();
    }
    EXPECT_THROW(simulate_capture(scene, SlowTofMode{kSweep, 0.0}, NoiseSpec::noiseless()), Error);
}

TEST(Reconstruct, NoiselessRoundTripInEveryMode) {
    const auto scene = make_procedural_scene(small(ProceduralKind::Ramp));
    const auto truth = DepthMap::truth_of(scene);
    struct Case {
        CaptureMode mode;
        Estimator est;
        double tol;
    };
    // 50 MHz keeps the 3 m far end inside the unambiguous range.
    const std::vector<Case> cases{{PhaseTofMode{45e6}, Estimator::FourBucket, 1e-9},
                                  {FdTofMode{kSweep}, Estimator::QuinnFernandes, 1e-3},
                                  {FdTofMode{kSweep}, Estimator::InterpPeriodogram, 1e-2},
                                  {SlowTofMode{FrequencySweep(10e6, 1e9, 4096), 1e-3}, Estimator::SlowTof, 5e-2}};
    for (const auto& c : cases) {
        const auto map = reconstruct(simulate_capture(scene, c.mode, NoiseSpec::noiseless()), c.est);
        ASSERT_EQ(map.valid_count(), map.size()) << estimator_name(c.est);
        for (std::size_t i = 0; i < map.size(); ++i) {
            EXPECT_NEAR(map.depth[i], truth.depth[i], c.tol) << estimator_name(c.est) << " pixel " << i;
        }
    }
}

TEST(Reconstruct, UniformOneMeter) {
    auto o = small(ProceduralKind::Uniform);
    o.min_depth = 1.0;
    const auto map = reconstruct(simulate_capture(make_procedural_scene(o), FdTofMode{kSweep}, NoiseSpec::noiseless()),
                                 Estimator::QuinnFernandes);
    for (double d : map.depth) {
        EXPECT_NEAR(d, 1.0, 1e-3);
    }
}

TEST(Reconstruct, ModeMismatchIsInvalidArgument) {
    const auto cube = simulate_capture(make_procedural_scene(small(ProceduralKind::Uniform)), PhaseTofMode{50e6},
                                       NoiseSpec::noiseless());
    for (auto est : {Estimator::QuinnFernandes, Estimator::InterpPeriodogram, Estimator::SlowTof}) {
        try {
            reconstruct(cube, est);
            FAIL() << "expected an error";
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
        }
    }
}

TEST(Reconstruct, FailingPixelsAreFlaggedNotFilled) {
    // 5 mm is far below one cycle of the sweep.
    std::vector<ScenePoint> pixels(6, ScenePoint::at_depth(1.0));
    pixels[2] = ScenePoint::at_depth(0.005);
    const auto map = reconstruct(simulate_capture(SceneSpec(3, 2, pixels), FdTofMode{kSweep}, NoiseSpec::noiseless()),
                                 Estimator::QuinnFernandes);
    EXPECT_EQ(map.valid_count(), 5u);
    EXPECT_EQ(map.valid[2], 0);
}

TEST(Reconstruct, TwentyDbSceneWithinOnePercent) {
    const auto scene = make_procedural_scene(ProceduralSceneOptions{});
    const auto map = reconstruct(simulate_capture(scene, FdTofMode{kSweep}, NoiseSpec{20.0, 123}),
                                 Estimator::QuinnFernandes);
    EXPECT_GE(depth_error_stats(map, DepthMap::truth_of(scene)).fraction_within_1_percent, 0.99);
}

TEST(Pipeline, DeterministicBitForBit) {
    auto o = small(ProceduralKind::Composite, 20, 20);
    o.multipath_fraction = 0.3;
    const auto scene = make_procedural_scene(o);
    const auto a = reconstruct(simulate_capture(scene, FdTofMode{kSweep}, {3.0, 5}), Estimator::QuinnFernandes);
    const auto b = reconstruct(simulate_capture(scene, FdTofMode{kSweep}, {3.0, 5}), Estimator::QuinnFernandes);
    EXPECT_TRUE(bit_equal(a.depth, b.depth));
    EXPECT_TRUE(bit_equal(a.amplitude, b.amplitude));
    EXPECT_EQ(a.valid, b.valid);
}

TEST(Psnr, ClosedForms) {
    const auto truth = constant_map(4, 4, 1.0);
    EXPECT_TRUE(std::isinf(psnr(truth, truth)));
    EXPECT_NEAR(psnr(constant_map(4, 4, 1.1), truth), 20.0, 1e-9);

    DepthMap none(4, 4);
    try {
        psnr(none, truth);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UndefinedMetric);
    }
    EXPECT_THROW(psnr(constant_map(2, 2, 1.0), truth), Error);
}

TEST(Psnr, FallsAsNoiseRises) {
    const auto scene = make_procedural_scene(small(ProceduralKind::Composite, 24, 24));
    const auto truth = DepthMap::truth_of(scene);
    double prev = INFINITY;
    for (double snr : {30.0, 15.0, 5.0, 0.0}) {
        double mean = 0.0;
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            mean += psnr(reconstruct(simulate_capture(scene, FdTofMode{kSweep}, {snr, seed}), Estimator::QuinnFernandes),
                         truth) / 4;
        }
        EXPECT_LT(mean, prev) << snr;
        prev = mean;
    }
}

TEST(DepthErrorStats, HandComputed) {
    auto truth = constant_map(2, 2, 2.0);
    DepthMap est = constant_map(2, 2, 2.0);
    est.depth = {2.0, 2.01, 2.1, 0.0};
    est.valid = {1, 1, 1, 0};
    const auto s = depth_error_stats(est, truth);
    EXPECT_EQ(s.valid, 3u);
    EXPECT_EQ(s.invalid, 1u);
    EXPECT_NEAR(s.median_percent, 0.5, 1e-9);
    EXPECT_NEAR(s.mean_percent, (0.0 + 0.5 + 5.0) / 3, 1e-9);
    EXPECT_NEAR(s.rmse, std::sqrt((0.0 + 1e-4 + 1e-2) / 3), 1e-12);
    EXPECT_NEAR(s.fraction_within_1_percent, 0.5, 1e-12);
    EXPECT_EQ(std::accumulate(s.histogram.begin(), s.histogram.end(), std::size_t{0}), 3u);
}

TEST(DepthErrorStats, PermutationInvariant) {
    const auto scene = make_procedural_scene(small(ProceduralKind::Composite, 16, 16));
    const auto truth = DepthMap::truth_of(scene);
    const auto map = reconstruct(simulate_capture(scene, FdTofMode{kSweep}, {5.0, 2}), Estimator::QuinnFernandes);

    std::vector<std::size_t> order(truth.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), std::mt19937_64(8));
    DepthMap pt(16, 16), pm(16, 16);
    for (std::size_t i = 0; i < order.size(); ++i) {
        pt.depth[i] = truth.depth[order[i]];
        pt.valid[i] = truth.valid[order[i]];
        pm.depth[i] = map.depth[order[i]];
        pm.valid[i] = map.valid[order[i]];
    }
    const auto a = depth_error_stats(map, truth);
    const auto b = depth_error_stats(pm, pt);
    EXPECT_DOUBLE_EQ(a.median_percent, b.median_percent);
    EXPECT_NEAR(a.mean_percent, b.mean_percent, 1e-12);
    EXPECT_NEAR(a.rmse, b.rmse, 1e-15);
    EXPECT_EQ(a.histogram, b.histogram);
}

TEST(MeanDepthBaseline, IsTheMean) {
    DepthMap truth = constant_map(2, 1, 0.0);
    truth.depth = {1.0, 3.0};
    const auto b = mean_depth_baseline(truth);
    EXPECT_EQ(b.depth, (std::vector<double>{2.0, 2.0}));
    EXPECT_NEAR(psnr(b, truth), 10 * std::log10(9.0 / 1.0), 1e-12);
}

TEST(SnrSweepExperiment, NoiselessIsExact) {
    const std::vector<double> levels{INFINITY};
    const auto r = snr_sweep_experiment(1.0, levels, 3, {}, {}, 1);
    ASSERT_EQ(r.rows.size(), 2u);
    for (const auto& row : r.rows) {
        EXPECT_LT(row.median_percent, 1e-4) << row.estimator;
        EXPECT_EQ(row.failures, 0u);
    }
}

TEST(SnrSweepExperiment, ShapeAndSeeds) {
    const std::vector<double> levels{1, 10, 30};
    const auto r = snr_sweep_experiment(1.0, levels, 200, {}, {}, 4);
    ASSERT_EQ(r.rows.size(), 6u);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.trials, 200u);
        EXPECT_GE(row.median_percent, 0.0);
    }
    EXPECT_LT(r.row("qf", 30).median_percent, r.row("qf", 1).median_percent);
    EXPECT_LT(r.row("four-bucket", 30).median_percent, r.row("four-bucket", 1).median_percent);
    EXPECT_LE(r.row("qf", 1).median_percent, r.row("four-bucket", 1).median_percent);
    EXPECT_THROW(snr_sweep_experiment(1.0, levels, 0, {}, {}, 4), Error);
    FdArmConfig bad;
    bad.estimator = Estimator::FourBucket;
    EXPECT_THROW(snr_sweep_experiment(1.0, levels, 10, {}, bad, 4), Error);
}

TEST(ResolutionExperiment, ThresholdNearTheBound) {
    const auto r = resolution_experiment(10e6, 100e6, 128);
    EXPECT_NEAR(r.bound, 3.6, 0.05);
    EXPECT_NEAR(r.ratio, 1.0, 0.2);
    // Everything at or above the threshold resolves, the step below does not.
    bool above = false;
    for (const auto& [sep, ok] : r.scan) {
        if (sep >= r.empirical_threshold - 1e-12) {
            above = true;
            EXPECT_TRUE(ok) << sep;
        }
    }
    EXPECT_TRUE(above);
    EXPECT_THROW(resolution_experiment(10e6, 100e6, 16), Error);
}

TEST(ResolutionExperiment, ScalesWithBandwidth) {
    const auto r1 = resolution_experiment(10e6, 200e6, 128);
    const auto r2 = resolution_experiment(10e6, 400e6, 128);
    EXPECT_NEAR(r1.ratio, 1.0, 0.2);
    EXPECT_NEAR(r2.ratio, 1.0, 0.2);
    EXPECT_NEAR(r1.empirical_threshold / r2.empirical_threshold, 2.0, 0.2);
}

TEST(Names, RoundTrip) {
    for (auto e : {Estimator::FourBucket, Estimator::InterpPeriodogram, Estimator::QuinnFernandes, Estimator::SlowTof}) {
        EXPECT_EQ(parse_estimator(estimator_name(e)), e);
    }
    EXPECT_THROW(parse_estimator("music"), Error);
    EXPECT_EQ(mode_name(PhaseTofMode{1e6}), "phase");
    EXPECT_EQ(mode_name(FdTofMode{kSweep}), "fd");
    EXPECT_EQ(mode_name(SlowTofMode{kSweep, 1e-3}), "slow");
}

TEST(Reconstruct, InvalidCountFallsWithSnr) {
    // Near-guard depths: noisy estimates drop below one cycle and get flagged.
    // Below 0 dB estimates scatter over the whole band and mostly land above
    // the guard (valid but wrong), so the property is checked on 1..30 dB.
    auto o = small(ProceduralKind::Ramp, 16, 16);
    o.min_depth = 0.16;
    o.max_depth = 0.4;
    const auto scene = make_procedural_scene(o);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> counts;
    for (double snr : {1.0, 5.0, 10.0, 20.0, 30.0}) {
        std::size_t invalid = 0;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const auto map = reconstruct(simulate_capture(scene, FdTofMode{kSweep}, {snr, seed}),
                                         Estimator::QuinnFernandes);
            invalid += map.size() - map.valid_count();
        }
        counts.push_back(invalid);
        EXPECT_LE(invalid, prev) << snr;
        prev = invalid;
    }
    EXPECT_GT(counts.front(), counts.back());
}
