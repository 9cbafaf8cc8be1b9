#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nos/cli/config.hpp"
#include "nos/cli/pipeline.hpp"
#include "nos/core/errors.hpp"
#include "nos/flowdata/io.hpp"

using namespace nos;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nos_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

// Seconds-scale run: coarse grid, tiny nets, a handful of epochs.
RunConfig tiny(const fs::path& dir) {
    RunConfig c = parse_run_config(R"(
        data.nodes = 400
        interp.scale = 1
        ae.hidden = 16
        ae.latent = 8
        ae.epochs = 3
        cae.channels = 4
        cae.epochs = 2
        ldon.branch_layers = 2
        ldon.branch_width = 8
        ldon.trunk_width = 8
        ldon.epochs = 3
        fno.modes = 3
        fno.width = 3
        fno.epochs = 2
        fno.sweep_modes = 3, 2
        mscale.modes = 3
        mscale.width = 2
        mscale.scales = 1, 10
        mscale.epochs = 2
        run.velocity_models = ldon, fno
    )");
    c.output_dir = dir.string();
    return c;
}

}  // namespace

TEST(RunConfig, DefaultsSurviveTheResolvedEcho) {
    const RunConfig d;
    const std::string text = resolved_config_text(d);
    EXPECT_EQ(resolved_config_text(parse_run_config(text)), text);
    EXPECT_EQ(resolved_config_text(parse_run_config("")), text);
    EXPECT_NE(text.find("data.snapshot_interval = 0.06\n"), std::string::npos);
    EXPECT_NE(text.find("ldon.ms_scales = 1,10,20,30,40,50,100,200,300,500\n"), std::string::npos);
}

TEST(RunConfig, CommentsBlankLinesAndLists) {
    const RunConfig c = parse_run_config("# header\n\n  fno.sweep_modes = 8, 16 # inline\nseed=7\n");
    EXPECT_EQ(c.fno_sweep_modes, (std::vector<std::size_t>{8, 16}));
    EXPECT_EQ(c.seed, 7u);
}

TEST(RunConfig, UnknownKeysAndBadValuesNameTheLine) {
    try {
        parse_run_config("seed = 1\n\nae.epoch = 5\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("ae.epoch"), std::string::npos);
    }
    EXPECT_THROW(parse_run_config("ae.lr = fast\n"), ConfigError);
    EXPECT_THROW(parse_run_config("ae.epochs = -3\n"), ConfigError);
    EXPECT_THROW(parse_run_config("ae.epochs = 3.5\n"), ConfigError);
    EXPECT_THROW(parse_run_config("just words\n"), ConfigError);
    EXPECT_THROW(parse_run_config("ae.epochs = 0\n"), ConfigError);
    EXPECT_THROW(parse_run_config("eval.window_last = 50\n"), ConfigError);
    EXPECT_THROW(parse_run_config("interp.scale = 5\n"), std::exception);
}

TEST(RunConfig, FieldOverrides) {
    const RunConfig c = parse_run_config("ldon.epochs = 100\npressure.ldon.epochs = 30\nvelocity.fno.modes = 8\n");
    EXPECT_EQ(c.for_field(FieldKind::pressure).ldon_epochs, 30u);
    EXPECT_EQ(c.for_field(FieldKind::velocity).ldon_epochs, 100u);
    EXPECT_EQ(c.for_field(FieldKind::velocity).fno_modes, 8u);
    EXPECT_EQ(c.for_field(FieldKind::pressure).fno_modes, 12u);
    EXPECT_NE(resolved_config_text(c).find("pressure.ldon.epochs = 30\n"), std::string::npos);
    // The dataset is shared between fields.
    EXPECT_THROW(parse_run_config("pressure.data.nodes = 10\n"), ConfigError);
    EXPECT_THROW(parse_run_config("pressure.ldon.epochs = many\n"), ConfigError);
    EXPECT_THROW(parse_run_config("velocity.nothing = 1\n"), ConfigError);
}

TEST(RunConfig, LadderResolution) {
    RunConfig c;
    EXPECT_EQ(c.velocities().size(), 17u);
    EXPECT_EQ(c.test_velocities(), (std::vector<double>{0.4, 0.7}));
    c.ladder = "0.1, 0.2, 0.3, 0.4";
    EXPECT_THROW(c.val_velocities(), ConfigError);
    c.val = {0.2};
    c.test = {0.4};
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.velocities().size(), 4u);
}

TEST(Models, Parse) {
    EXPECT_EQ(parse_model("ms-ldon").autoencoder(), "mlp-ae");
    EXPECT_EQ(parse_model("ms-ldon-cae").autoencoder(), "cae");
    EXPECT_TRUE(parse_model("ms-ldon-cae").on_grid);
    EXPECT_TRUE(parse_model("ms-ldon").multiscale);
    EXPECT_FALSE(parse_model("ldon").multiscale);
    EXPECT_EQ(parse_model("fno-m24").modes, 24u);
    EXPECT_TRUE(parse_model("mscale-fno").multiscale);
    EXPECT_EQ(parse_model("cae").family, ModelFamily::cae);
    for (const char* bad : {"fno-m", "fno-m0", "fno-mx", "deeponet", ""}) EXPECT_THROW(parse_model(bad), ConfigError) << bad;
}

TEST(ExitCodes, Taxonomy) {
    EXPECT_EQ(exit_code_for(ConfigError("x")), 2);
    EXPECT_EQ(exit_code_for(InputError("x")), 3);
    EXPECT_EQ(exit_code_for(ParseError("x", 4)), 3);
    EXPECT_EQ(exit_code_for(DivergenceError("x")), 4);
    EXPECT_EQ(exit_code_for(std::runtime_error("x")), 1);
}

TEST(Pipeline, GenDataManifestMatchesDeskSplit) {
    const fs::path dir = scratch_dir("gen");
    Pipeline p(tiny(dir));
    p.gen_data();
    EXPECT_EQ(line_count(dir / "data" / "manifest.csv"), 1 + 2 * 17u);
    const std::string m = slurp(dir / "data" / "manifest.csv");
    std::size_t train = 0, val = 0, test = 0;
    for (std::size_t pos = 0; (pos = m.find(",velocity,", pos)) != std::string::npos; ++pos) {
        const std::size_t start = m.rfind('\n', pos) + 1;
        const std::string line = m.substr(start, m.find('\n', pos) - start);
        train += line.find(",train,") != std::string::npos;
        val += line.find(",val,") != std::string::npos;
        test += line.find(",test,") != std::string::npos;
    }
    EXPECT_EQ(train, 12u);
    EXPECT_EQ(val, 3u);
    EXPECT_EQ(test, 2u);
    EXPECT_TRUE(fs::is_regular_file(dir / "config.resolved"));
    EXPECT_EQ(load_unstructured((dir / "data" / "u0.4000_pressure.nosg").string()).meta.field_kind, FieldKind::pressure);
}

TEST(Pipeline, MissingInputsLeaveNoArtifacts) {
    const fs::path dir = scratch_dir("missing");
    Pipeline p(tiny(dir));
    EXPECT_THROW(p.interp(), InputError);
    EXPECT_THROW(p.train("fno", FieldKind::velocity), InputError);
    EXPECT_THROW(p.predict("ldon", FieldKind::velocity), InputError);
    EXPECT_THROW(p.evaluate("ldon", FieldKind::velocity), InputError);
    EXPECT_THROW(p.report(), InputError);
    EXPECT_FALSE(fs::exists(dir));
    EXPECT_THROW(p.train("nonsense", FieldKind::velocity), ConfigError);
    EXPECT_THROW(p.predict("mlp-ae", FieldKind::velocity), ConfigError);

    RunConfig bad = tiny(dir);
    bad.window_last = 60;
    EXPECT_THROW(Pipeline{bad}, ConfigError);
    EXPECT_FALSE(fs::exists(dir));
}

TEST(Pipeline, EvaluatingAReferenceAgainstItselfIsExact) {
    const fs::path dir = scratch_dir("self");
    Pipeline p(tiny(dir));
    p.gen_data();
    p.interp();
    for (const char* sub : {"data", "grid"}) {
        const fs::path ref = dir / sub / "u0.4000_pressure.nosg";
        const auto rows = evaluate_files(ref.string(), ref.string(), p.config(), "self", dir / "eval_self" / sub);
        ASSERT_FALSE(rows.empty());
        for (const auto& r : rows) {
            if (r.metric == "capture") EXPECT_DOUBLE_EQ(r.value, 1.0) << r.key;
            else EXPECT_EQ(r.value, 0.0) << r.metric << " " << r.key;
        }
        EXPECT_TRUE(fs::is_regular_file(dir / "eval_self" / sub / "pressure_drop.csv"));
    }
    EXPECT_THROW(evaluate_files((dir / "data" / "u0.4000_pressure.nosg").string(),
                                (dir / "grid" / "u0.4000_pressure.nosg").string(), p.config(), "x", dir / "bad"),
                 InputError);
}

TEST(Pipeline, EndToEndIsByteIdenticalAndReportsFourPressureModels) {
    std::map<std::string, std::string> first;
    for (int round = 0; round < 2; ++round) {
        const fs::path dir = scratch_dir("e2e" + std::to_string(round));
        Pipeline p(tiny(dir));
        p.run();
        const fs::path table = dir / "report" / "pressure_drop_pressure.csv";
        ASSERT_TRUE(fs::is_regular_file(table));
        EXPECT_EQ(line_count(table), 5u);
        EXPECT_EQ(slurp(dir / "report" / "capture_velocity.csv").substr(0, 40).find("model"), 0u);
        EXPECT_EQ(line_count(dir / "report" / "capture_velocity.csv"), 4u);  // ldon, fno, fno-m2
        EXPECT_EQ(slurp(table).substr(0, slurp(table).find('\n')), "model,u0.4000,u0.7000");
        for (const auto& e : fs::recursive_directory_iterator(dir)) {
            if (!e.is_regular_file() || e.path().filename() == "config.resolved") continue;
            const std::string rel = fs::relative(e.path(), dir).string();
            if (round == 0) first[rel] = slurp(e.path());
            else EXPECT_EQ(slurp(e.path()), first.at(rel)) << rel;
        }
    }
}

TEST(RunConfig, ShippedExampleSpellsOutTheDefaults) {
    const RunConfig c = load_run_config(NOS_SOURCE_DIR "/configs/desk.cfg");
    EXPECT_EQ(resolved_config_text(c), resolved_config_text(RunConfig{}));
}
