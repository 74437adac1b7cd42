#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "oracles.hpp"
#include "plad/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& work() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("plad_cli_tests_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct CliResult {
    int code = -1;
    std::string err;
};

// Runs the CLI inside the work directory; stderr is captured.
CliResult run_cli(const std::string& args) {
    const fs::path err = work() / "stderr.txt";
    const std::string cmd = "cd '" + work().string() + "' && PLAD_THREADS=1 '" PLAD_CLI_PATH "' " + args + " > /dev/null 2> '" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(err);
    std::stringstream ss;
    ss << f.rdbuf();
    r.err = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::vector<double> report_column(const fs::path& csv) {
    std::ifstream f(csv);
    std::string line;
    std::getline(f, line);
    std::vector<double> out;
    while (std::getline(f, line)) {
        const auto a = line.find(',');
        const auto b = line.find(',', a + 1);
        out.push_back(std::stod(line.substr(a + 1, b - a - 1)));
    }
    return out;
}

// A small csg2d dataset and a one-epoch tiny model shared by the model tests.
class TrainedModel : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        ASSERT_EQ(run_cli("gen-data --dsl csg2d --vocab mini --count 40 --val-count 10 --k-max 3 --seed 3 --out data").code, 0);
        ASSERT_EQ(run_cli("pretrain --data data --out pre --preset tiny --epochs 1 --batch-size 20 --val-count 10 "
                       "--beam-val 1 --no-wallclock")
                      .code,
                  0);
    }
};

}  // namespace

TEST(GenData, SameSeedIsByteIdenticalAndEchoesMeta) {
    ASSERT_EQ(run_cli("gen-data --dsl csg3d --count 1000 --seed 7 --out g1").code, 0);
    ASSERT_EQ(run_cli("gen-data --dsl csg3d --count 1000 --seed 7 --out g2").code, 0);
    for (const char* f : {"vocab.txt", "meta.txt", "programs.txt", "shapes.bin"}) {
        EXPECT_EQ(slurp(work() / "g1" / f), slurp(work() / "g2" / f)) << f;
    }
    const auto meta = plad::read_settings(work() / "g1" / "meta.txt");
    EXPECT_EQ(plad::setting(meta, "seed"), "7");
    EXPECT_EQ(plad::setting(meta, "count"), "1000");
    EXPECT_EQ(plad::setting(meta, "dsl"), "csg3d");
    EXPECT_TRUE(fs::exists(work() / "g1" / "config.ini"));
}

TEST(GenData, ZeroCountIsAUsageError) {
    const CliResult r = run_cli("gen-data --dsl csg2d --count 0 --out z");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("--count"), std::string::npos);
}

TEST(Config, FileSuppliesOptionsAndFlagsOverrideIt) {
    write_text(work() / "g.cfg", "# gen settings\ndsl=csg2d\ncount=5\nvocab=mini\nout=\"cfg\"\n");
    ASSERT_EQ(run_cli("gen-data --config g.cfg --count 7").code, 0);
    EXPECT_EQ(plad::setting(plad::read_settings(work() / "cfg" / "meta.txt"), "count"), "7");
    // The echoed settings replay the same run.
    ASSERT_EQ(run_cli("gen-data --config cfg/config.ini --out cfg_replay").code, 0);
    EXPECT_EQ(slurp(work() / "cfg" / "programs.txt"), slurp(work() / "cfg_replay" / "programs.txt"));
}

TEST(Config, UnknownKeyIsRejected) {
    write_text(work() / "bad.cfg", "dsl=csg2d\ncount=5\nbeam_width=3\nout=bad\n");
    EXPECT_EQ(run_cli("gen-data --config bad.cfg").code, 1);
    EXPECT_EQ(run_cli("gen-data --config absent.cfg").code, 2);
}

TEST(Exec, CircleRenderMatchesRasterOracle) {
    write_text(work() / "circle.txt", "circle_32_32_12 STOP\n");
    ASSERT_EQ(run_cli("exec --dsl csg2d --vocab mini --programs circle.txt --out circ --render").code, 0);
    const std::string pgm = slurp(work() / "circ" / "line_1.pgm");
    const std::string header = "P5\n64 64\n255\n";
    ASSERT_EQ(pgm.substr(0, header.size()), header);
    const auto black = std::count(pgm.begin() + static_cast<long>(header.size()), pgm.end(), '\0');
    const auto expected = oracle::shape2d(plad::Shape2dType::Circle, 32, 32, 12).count();
    EXPECT_EQ(static_cast<std::size_t>(black), expected);
    EXPECT_TRUE(fs::exists(work() / "circ" / "line_1.pladgrid"));
}

TEST(Exec, MalformedLineIsReportedByNumber) {
    write_text(work() / "bad.txt", "circle_32_32_12 STOP\nsquare_16_16_8 STOP\ncircle_32_32_12 union STOP\n");
    const CliResult r = run_cli("exec --dsl csg2d --vocab mini --programs bad.txt --out badout");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(Exec, ThreeDimensionalRenderWritesThreeProjections) {
    ASSERT_EQ(run_cli("gen-data --dsl csg3d --count 1 --seed 2 --out one3d").code, 0);
    std::ifstream in(work() / "one3d" / "programs.txt");
    std::string first;
    std::getline(in, first);
    write_text(work() / "p3.txt", first + "\n");
    ASSERT_EQ(run_cli("exec --dsl csg3d --programs p3.txt --out r3 --render").code, 0);
    int pgms = 0;
    for (const auto& e : fs::directory_iterator(work() / "r3")) pgms += e.path().extension() == ".pgm";
    EXPECT_EQ(pgms, 3);
}

TEST(Exec, MissingProgramFileIsAnIoError) {
    EXPECT_EQ(run_cli("exec --dsl csg2d --programs nowhere.txt --out x").code, 2);
}

TEST_F(TrainedModel, EvalWiderBeamNeverWorsePerShape) {
    ASSERT_EQ(run_cli("eval --model pre/model.pladckpt --shapes data --val --beam 1 --out e1").code, 0);
    ASSERT_EQ(run_cli("eval --model pre/model.pladckpt --shapes data --val --beam 10 --out e10").code, 0);
    const auto one = report_column(work() / "e1" / "report.csv");
    const auto ten = report_column(work() / "e10" / "report.csv");
    ASSERT_EQ(one.size(), 10u);
    ASSERT_EQ(ten.size(), one.size());
    for (std::size_t i = 0; i < one.size(); ++i) EXPECT_GE(ten[i], one[i]);
}

TEST_F(TrainedModel, ConflictingMethodsAreRejected) {
    const std::string base = "finetune --model pre/model.pladckpt --targets data --val data --out ft ";
    EXPECT_EQ(run_cli(base + "--methods rl,st").code, 1);
    EXPECT_EQ(run_cli(base + "--methods st,st").code, 1);
    EXPECT_EQ(run_cli(base + "--methods bogus").code, 1);
}

TEST_F(TrainedModel, MissingCheckpointIsAnIoError) {
    EXPECT_EQ(run_cli("eval --model nothing.pladckpt --shapes data --out e").code, 2);
    write_text(work() / "junk.pladckpt", "PLADCKPT1 truncated");
    EXPECT_EQ(run_cli("eval --model junk.pladckpt --shapes data --out e").code, 2);
}

TEST_F(TrainedModel, FineTuneWritesTraceAndCheckpoints) {
    ASSERT_EQ(run_cli("finetune --model pre/model.pladckpt --targets data --val data --methods lest,st --max-rounds 1 "
                   "--max-round-epochs 1 --beam-inner 2 --beam-val-inround 1 --beam-val-between 1 --batch-size 20 "
                   "--no-wallclock --out ft1")
                  .code,
              0);
    std::ifstream trace(work() / "ft1" / "trace.csv");
    std::string header;
    std::getline(trace, header);
    EXPECT_EQ(header, "round,epoch,phase,mean_sim,median_sim,best_val_sim,wallclock_s");
    EXPECT_TRUE(fs::exists(work() / "ft1" / "model.pladckpt"));
    EXPECT_TRUE(fs::exists(work() / "ft1" / "ckpt" / "round_1.pladckpt"));
    // Replaying the echoed settings reproduces the run.
    ASSERT_EQ(run_cli("finetune --config ft1/config.ini --out ft2").code, 0);
    EXPECT_EQ(slurp(work() / "ft1" / "trace.csv"), slurp(work() / "ft2" / "trace.csv"));
}
