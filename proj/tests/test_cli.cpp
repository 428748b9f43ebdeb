#include <gtest/gtest.h>

#include <chrono>
#include <csignal>
#include <filesystem>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include "metafuse/metafuse.hpp"

// after Eigen (see tools/metafuse.cpp)
#include <httplib.h>

namespace fs = std::filesystem;
using namespace metafuse;

namespace {

const std::string kCli = METAFUSE_CLI;
const std::string kConfig = METAFUSE_DEMO_DIR "/config.json";

class Cli : public ::testing::Test {
protected:
    static fs::path dir_;

    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / ("metafuse_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        ASSERT_EQ(run("settings --config " + kConfig + " -o " + path("settings.csv")), 0);
        ASSERT_EQ(run("batch -q --config " + kConfig + " --settings " + path("settings.csv") + " -o " + path("sol_1.csv")), 0);
        ASSERT_EQ(run("aris --solutions " + path("sol_1.csv") + " -o " + path("aris.csv")), 0);
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }

    static std::string path(const std::string& name) { return (dir_ / name).string(); }

    static int run(const std::string& args) {
        const std::string cmd = kCli + " " + args + " >>" + path("log.txt") + " 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    static std::string slurp(const std::string& name) { return csv::read_file(path(name)); }
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, SettingsFlagsAndReproducibility) {
    const std::string args = "settings --config " + kConfig + " --nrow 100 --max-k 40 --seed 42 -o ";
    ASSERT_EQ(run(args + path("s100.csv")), 0);
    ASSERT_EQ(run(args + path("s100b.csv")), 0);
    EXPECT_EQ(slurp("s100.csv"), slurp("s100b.csv"));
    const auto t = csv::read(path("s100.csv"));
    ASSERT_EQ(t.rows.size(), 100u);
    const auto k = t.require_column("k", "settings");
    for (const auto& r : t.rows) EXPECT_LE(std::stoi(r[k]), 40);
}

TEST_F(Cli, BatchIdenticalAcrossProcessCounts) {
    for (const char* p : {"2", "max"}) {
        const std::string out = std::string("sol_") + p + ".csv";
        ASSERT_EQ(run("batch -q --processes " + std::string(p) + " --config " + kConfig + " --settings " +
                      path("settings.csv") + " -o " + path(out)),
                  0);
        EXPECT_EQ(slurp(out), slurp("sol_1.csv")) << "processes " << p;
    }
}

TEST_F(Cli, SplitFileRoundTripsThroughExportUi) {
    csv::write_file(path("splits.txt"), "2,5,12,17\n");
    ASSERT_EQ(run("order --aris " + path("aris.csv") + " -o " + path("order.csv")), 0);
    ASSERT_EQ(run("split --aris " + path("aris.csv") + " --order " + path("order.csv") + " --solutions " + path("sol_1.csv") +
                  " --splits-file " + path("splits.txt") + " -o " + path("reps.csv")),
              0);
    EXPECT_EQ(csv::read(path("reps.csv")).rows.size(), 5u);
    ASSERT_EQ(run("export-ui --aris " + path("aris.csv") + " --order " + path("order.csv") + " --solutions " +
                  path("sol_1.csv") + " --splits-file " + path("splits.txt") + " -o " + path("bundle.json")),
              0);
    const auto b = read_ui_bundle(path("bundle.json"));
    EXPECT_EQ(b.splits, (std::vector<int>{2, 5, 12, 17}));
    EXPECT_EQ(partition_by_split_vector(b.order, b.splits).block_sizes(), (std::vector<std::size_t>{2, 3, 7, 5, 3}));
    ASSERT_EQ(b.tracks.size(), 1u);
    EXPECT_EQ(b.tracks[0].name, "nclust");

    // the annotator's exported file is the split vector as text
    csv::write_file(path("exported.txt"), format_split_vector(b.splits) + "\n");
    ASSERT_EQ(run("export-ui --aris " + path("aris.csv") + " --order " + path("order.csv") + " --solutions " +
                  path("sol_1.csv") + " --splits-file " + path("exported.txt") + " -o " + path("bundle2.json")),
              0);
    EXPECT_EQ(slurp("bundle.json"), slurp("bundle2.json"));
    ASSERT_EQ(run("split --aris " + path("aris.csv") + " --order " + path("order.csv") + " --solutions " + path("sol_1.csv") +
                  " --splits " + format_split_vector(b.splits) + " -o " + path("reps2.csv")),
              0);
    EXPECT_EQ(slurp("reps.csv"), slurp("reps2.csv"));
}

TEST_F(Cli, EmptySplitVectorIsOneMetaCluster) {
    csv::write_file(path("empty.txt"), "\n");
    ASSERT_EQ(run("split --aris " + path("aris.csv") + " --solutions " + path("sol_1.csv") + " --splits-file " +
                  path("empty.txt") + " -o " + path("one.csv")),
              0);
    EXPECT_EQ(csv::read(path("one.csv")).rows.size(), 1u);
}

TEST_F(Cli, ErrorsExitNonzero) {
    csv::write_file(path("bad.json"), R"({"components": [], "colour": 1})");
    EXPECT_NE(run("complete --config " + path("bad.json") + " -o " + path("x.csv")), 0);
    EXPECT_NE(run("split --aris " + path("aris.csv") + " --solutions " + path("sol_1.csv") + " --splits 0,3 -o " + path("x.csv")), 0);
    EXPECT_NE(run("batch --config " + kConfig + " --settings " + path("settings.csv") + " --processes zero -o " + path("x.csv")), 0);
    EXPECT_NE(run("no-such-command"), 0);
    EXPECT_NE(slurp("log.txt").find("error: config:"), std::string::npos);
}

TEST_F(Cli, ServeHostsBundleAndStaticFiles) {
    ASSERT_EQ(run("export-ui --aris " + path("aris.csv") + " -o " + path("served.json")), 0);
    fs::create_directories(dir_ / "www");
    csv::write_file(path("www/index.html"), "<!doctype html><title>annotator</title>\n");
    const int port = 20000 + ::getpid() % 20000;
    const pid_t child = ::fork();
    ASSERT_GE(child, 0);
    if (child == 0) {
        const std::string p = std::to_string(port), root = path("www"), bundle = path("served.json"), log = path("serve.log");
        if (!::freopen(log.c_str(), "w", stderr)) ::_exit(126);
        ::execl(kCli.c_str(), kCli.c_str(), "serve", "--port", p.c_str(), "--root", root.c_str(), "--bundle", bundle.c_str(),
                static_cast<char*>(nullptr));
        ::_exit(127);
    }
    struct Reaper {
        pid_t pid;
        ~Reaper() {
            ::kill(pid, SIGTERM);
            ::waitpid(pid, nullptr, 0);
        }
    } reaper{child};
    httplib::Client client("127.0.0.1", port);
    httplib::Result bundle;
    for (int attempt = 0; attempt < 100 && !bundle; ++attempt) {
        bundle = client.Get("/bundle.json");
        if (!bundle) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    ASSERT_TRUE(bundle) << "server did not come up";
    EXPECT_EQ(bundle->status, 200);
    EXPECT_EQ(bundle->body, slurp("served.json"));
    auto index = client.Get("/");
    ASSERT_TRUE(index);
    EXPECT_EQ(index->status, 200);
    EXPECT_NE(index->body.find("annotator"), std::string::npos);
    auto missing = client.Get("/nope.js");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);
}
