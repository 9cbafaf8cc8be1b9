#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <numbers>

#include "nos/core/errors.hpp"
#include "nos/flowdata/generator.hpp"
#include "nos/flowdata/io.hpp"
#include "nos/flowdata/split.hpp"

using namespace nos;

namespace {

CaseMeta meta(double U, FieldKind kind = FieldKind::velocity, std::size_t T = 50) {
    return {U, kind, T, 0.1};
}

FieldGenerator desk_generator(GeneratorConstants c = {}) { return FieldGenerator(Geometry::tube_bundle(), c); }

std::vector<double> desk_nodes(std::uint64_t seed = 7) {
    Rng rng(seed);
    return make_nodes(Geometry::tube_bundle(), NodeLayout{}, rng);
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("nos_test_" + name)).string();
}

UnstructuredSeries random_unstructured(Rng& rng, std::size_t n, std::size_t T) {
    UnstructuredSeries s;
    s.meta = meta(0.3, FieldKind::pressure, T);
    for (std::size_t i = 0; i < n; ++i) {
        s.node_xy.push_back(static_cast<double>(i) * 1e-3);
        s.node_xy.push_back(rng.uniform(-1, 1));
    }
    for (std::size_t k = 0; k < n * T; ++k) s.values.push_back(quantize(rng.uniform(-50, 50)));
    return s;
}

}  // namespace

TEST(Generator, NoOscillationGivesTimeInvariantField) {
    GeneratorConstants c;
    c.amplitude = 0.0;
    c.pressure_wave = 0.0;
    auto gen = desk_generator(c);
    auto nodes = desk_nodes();
    for (FieldKind kind : {FieldKind::velocity, FieldKind::pressure}) {
        auto s = gen.unstructured(meta(0.35, kind), nodes);
        for (std::size_t t = 1; t < s.n_frames(); ++t) {
            auto a = s.frame(0), b = s.frame(t);
            ASSERT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)), 0);
        }
    }
}

TEST(Generator, ScalingWithInletVelocity) {
    GeneratorConstants c;
    c.amplitude = 0.0;
    c.pressure_wave = 0.0;
    auto gen = desk_generator(c);
    for (double x : {-0.05, 0.0, 0.07, 0.18}) {
        for (double y : {-0.03, 0.001, 0.04}) {
            EXPECT_EQ(gen.velocity(x, y, 1.3, 0.5), 2.0 * gen.velocity(x, y, 1.3, 0.25));
            EXPECT_EQ(gen.pressure(x, y, 1.3, 0.5), 4.0 * gen.pressure(x, y, 1.3, 0.25));
        }
    }
}

TEST(Generator, WakeProbePeaksAtSheddingFrequency) {
    auto gen = desk_generator();
    for (double U : {0.2, 0.4, 0.6, 0.7}) {
        const CaseMeta m = meta(U);
        std::vector<double> sig;
        for (std::size_t k = 0; k < m.n_timesteps; ++k) sig.push_back(gen.velocity(0.05, 0.01, k * 0.1, U));
        std::size_t best = 0;
        double best_mag = -1;
        for (std::size_t b = 1; b <= sig.size() / 2; ++b) {
            std::complex<double> acc;
            for (std::size_t k = 0; k < sig.size(); ++k)
                acc += sig[k] * std::polar(1.0, -2 * std::numbers::pi * double(b * k) / double(sig.size()));
            if (std::abs(acc) > best_mag) best_mag = std::abs(acc), best = b;
        }
        const double f = 5.0 * U;
        const auto expect = static_cast<std::size_t>(std::lround(f * m.n_timesteps * m.snapshot_interval));
        EXPECT_EQ(best, expect) << "U=" << U;
    }
}

TEST(Generator, RejectsAliasedFrequency) {
    auto gen = desk_generator();
    EXPECT_THROW(gen.check_sampling(meta(1.1)), ConfigError);
    EXPECT_NO_THROW(gen.check_sampling(meta(1.0)));
}

TEST(Generator, RejectsObstacleOutsideDomain) {
    Geometry g = Geometry::tube_bundle();
    g.obstacles.push_back({0.188, 0.0, 0.006});
    EXPECT_THROW(FieldGenerator(g, {}), ConfigError);
}

TEST(Generator, NodesAvoidSolidsAndAreUnique) {
    auto nodes = desk_nodes();
    const Geometry g = Geometry::tube_bundle();
    EXPECT_GE(nodes.size() / 2, 2500u);
    for (std::size_t i = 0; i < nodes.size() / 2; ++i) EXPECT_FALSE(g.inside_solid(nodes[2 * i], nodes[2 * i + 1]));
    auto s = desk_generator().unstructured(meta(0.4), nodes);
    EXPECT_NO_THROW(s.validate());
}

TEST(Generator, DeterministicUnderSeed) {
    auto a = desk_generator().unstructured(meta(0.4), desk_nodes(11));
    auto b = desk_generator().unstructured(meta(0.4), desk_nodes(11));
    EXPECT_TRUE(bitwise_equal(a.node_xy, b.node_xy));
    EXPECT_TRUE(bitwise_equal(a.values, b.values));
    auto c = desk_generator().unstructured(meta(0.4), desk_nodes(12));
    EXPECT_FALSE(bitwise_equal(a.node_xy, c.node_xy));
}

TEST(Generator, StructuredMasksSolids) {
    auto s = desk_generator().structured(meta(0.4, FieldKind::velocity, 4), 48, 129);
    EXPECT_NO_THROW(s.validate());
    std::size_t masked = 0;
    for (auto m : s.solid_mask) masked += m;
    EXPECT_GT(masked, 0u);
    EXPECT_NEAR(s.dx, 0.252 / 128, 1e-15);
    EXPECT_EQ(s.x_of(s.W - 1), Geometry{}.x_max);
}

TEST(Difference, HandArithmetic) {
    UnstructuredSeries s;
    s.meta = meta(0.1, FieldKind::velocity, 2);
    s.node_xy = {0, 0, 1, 0};
    s.values = {1, 2, 3, 5};
    auto d = to_difference(s);
    EXPECT_EQ(d.values, (std::vector<double>{2, 3}));
    EXPECT_EQ(d.initial, (std::vector<double>{1, 2}));
    EXPECT_EQ(d.n_frames(), 1u);
    EXPECT_NO_THROW(d.validate());
}

TEST(Difference, ConstantSeriesGivesZeros) {
    GeneratorConstants c;
    c.amplitude = 0.0;
    auto d = to_difference(desk_generator(c).unstructured(meta(0.3), desk_nodes()));
    for (double v : d.values) ASSERT_EQ(v, 0.0);
}

TEST(Difference, RoundTripIsBitwiseOnPipelineData) {
    auto gen = desk_generator();
    auto nodes = desk_nodes();
    for (FieldKind kind : {FieldKind::velocity, FieldKind::pressure}) {
        for (double U : {0.1, 0.4, 0.7}) {
            auto s = gen.unstructured(meta(U, kind), nodes);
            auto d = to_difference(s);
            auto r = recover_full(d, d.initial);
            ASSERT_TRUE(bitwise_equal(r.values, s.values));
            auto g = gen.structured(meta(U, kind), 48, 129);
            auto gd = to_difference(g);
            ASSERT_TRUE(bitwise_equal(recover_full(gd, gd.initial).values, g.values));
        }
    }
    Rng rng(5);
    auto s = random_unstructured(rng, 40, 6);
    auto d = to_difference(s);
    EXPECT_TRUE(bitwise_equal(recover_full(d, d.initial).values, s.values));
}

TEST(Difference, RecoverSpecialCases) {
    Rng rng(6);
    auto s = random_unstructured(rng, 10, 4);
    auto d = to_difference(s);
    UnstructuredSeries zero = d;
    std::fill(zero.values.begin(), zero.values.end(), 0.0);
    auto r = recover_full(zero, d.initial);
    for (std::size_t t = 0; t < r.n_frames(); ++t)
        for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(r.frame(t)[i], d.initial[i]);
    UnstructuredSeries neg = d;
    for (std::size_t i = 0; i < neg.values.size(); ++i) neg.values[i] = -d.initial[i % 10];
    auto z = recover_full(neg, d.initial);
    for (std::size_t t = 1; t < z.n_frames(); ++t)
        for (double v : z.frame(t)) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(recover_full(d, std::vector<double>(3)), DimensionError);
}

TEST(Difference, RecoverMatchesElementwiseSum) {
    Rng rng(7);
    std::vector<double> diff(12), u0(4);
    for (double& v : diff) v = rng.uniform(-1, 1);
    for (double& v : u0) v = rng.uniform(-1, 1);
    auto out = add_initial(diff, u0);
    for (std::size_t i = 0; i < diff.size(); ++i) EXPECT_EQ(out[i], diff[i] + u0[i % 4]);
}

TEST(Series, DuplicateNodesRejected) {
    UnstructuredSeries s;
    s.meta = meta(0.1, FieldKind::velocity, 2);
    s.node_xy = {0, 0, 0, 0};
    s.values = {1, 2, 3, 4};
    EXPECT_THROW(s.validate(), InputError);
}

TEST(Split, PaperLadder) {
    auto split = make_split(paper_ladder(), paper_val(), default_test(), meta(0.1));
    EXPECT_EQ(split.train.size(), 45u);
    EXPECT_EQ(split.val.size(), 5u);
    ASSERT_EQ(split.test.size(), 2u);
    EXPECT_DOUBLE_EQ(split.test[0].inlet_velocity, 0.4);
    EXPECT_DOUBLE_EQ(split.test[1].inlet_velocity, 0.7);
}

TEST(Split, DeskLadder) {
    auto split = make_split(desk_ladder(), desk_val(), default_test(), meta(0.1));
    EXPECT_EQ(split.train.size(), 12u);
    EXPECT_EQ(split.val.size(), 3u);
    EXPECT_EQ(split.test.size(), 2u);
    for (const auto& m : split.train) {
        EXPECT_GE(m.inlet_velocity, 0.1 - 1e-12);
        EXPECT_LE(m.inlet_velocity, 0.6 + 1e-12);
        EXPECT_GT(std::abs(m.inlet_velocity - 0.4), 1e-6);
    }
    EXPECT_NO_THROW(split.validate());
}

TEST(Split, OverlapAndMissingValuesRejected) {
    EXPECT_THROW(make_split(desk_ladder(), {0.2, 0.4}, default_test(), meta(0.1)), ConfigError);
    EXPECT_THROW(make_split(desk_ladder(), {0.25}, default_test(), meta(0.1)), ConfigError);
    EXPECT_THROW(make_split({0.1, 0.1, 0.4, 0.7}, {}, default_test(), meta(0.1)), ConfigError);
}

TEST(Container, UnstructuredRoundTripIsBitwise) {
    Rng rng(8);
    auto s = random_unstructured(rng, 25, 5);
    const std::string path = temp_path("u.nosg");
    save_series(path, s);
    auto r = load_unstructured(path);
    EXPECT_EQ(r.meta, s.meta);
    EXPECT_TRUE(bitwise_equal(r.node_xy, s.node_xy));
    EXPECT_TRUE(bitwise_equal(r.values, s.values));
    auto d = to_difference(s);
    save_series(path, d);
    auto rd = load_unstructured(path);
    EXPECT_TRUE(rd.is_difference);
    EXPECT_TRUE(bitwise_equal(rd.initial, d.initial));
    std::filesystem::remove(path);
}

TEST(Container, StructuredRoundTripIsBitwise) {
    auto s = desk_generator().structured(meta(0.4, FieldKind::pressure, 5), 16, 43);
    const std::string path = temp_path("s.nosg");
    save_series(path, s);
    auto r = load_structured(path);
    EXPECT_EQ(r.H, s.H);
    EXPECT_EQ(r.dx, s.dx);
    EXPECT_EQ(r.solid_mask, s.solid_mask);
    EXPECT_TRUE(bitwise_equal(r.values, s.values));
    std::filesystem::remove(path);
}

TEST(Container, CorruptMagicIsParseError) {
    Rng rng(9);
    auto bytes = encode(to_container(random_unstructured(rng, 4, 2)));
    bytes[1] = 'X';
    try {
        decode(bytes);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 0u);
    }
}

TEST(Container, BadVersionIsParseError) {
    Rng rng(10);
    auto bytes = encode(to_container(random_unstructured(rng, 4, 2)));
    bytes[4] = 9;
    try {
        decode(bytes);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 4u);
    }
}

TEST(Container, TruncatedValuesNameExpectedLength) {
    Rng rng(11);
    auto bytes = encode(to_container(random_unstructured(rng, 4, 2)));
    bytes.resize(bytes.size() - 12);
    try {
        decode(bytes);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("expected 8 values"), std::string::npos) << msg;
        EXPECT_NE(msg.find("found 52 bytes"), std::string::npos) << msg;
    }
}

TEST(Container, HeaderDoublesRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -0.0, 5e-324}) EXPECT_EQ(parse_double(format_double(v)), v);
}
