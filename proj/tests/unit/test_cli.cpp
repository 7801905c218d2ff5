#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"
#include "criteria.hpp"
#include "cwlssvm/data.hpp"
#include "cwlssvm/model_io.hpp"

using namespace cwlssvm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string dir(const std::string& name) {
    const fs::path p = fs::path(CWLSSVM_TEST_TMPDIR) / "cli" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const std::string& path) { return json::parse(slurp(path)); }

Vector read_column(const std::string& csv, int column = 0) {
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    std::vector<double> v;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string cell;
        for (int c = 0; c <= column; ++c) {
            std::getline(ls, cell, ',');
        }
        v.push_back(std::stod(cell));
    }
    return Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
}

} // namespace

TEST(CliGen, ShapeAndDeterminism) {
    const std::string d = dir("gen");
    ASSERT_EQ(invoke({"gen", "--n", "100", "--seed", "3", "--out", d + "/a"}).code, 0);
    ASSERT_EQ(invoke({"gen", "--n", "100", "--seed", "3", "--out", d + "/b"}).code, 0);
    const auto ds = load_csv(d + "/a.csv");
    EXPECT_EQ(ds.points(), 100);
    EXPECT_EQ(ds.inputs(), 10);
    EXPECT_EQ(slurp(d + "/a.csv"), slurp(d + "/b.csv"));
    const auto truth = read_json(d + "/a.truth.json");
    EXPECT_EQ(truth["true_components"], json({1, 2, 3, 4}));
}

TEST(CliGen, NoiselessTargets) {
    const std::string d = dir("gen0");
    ASSERT_EQ(invoke({"gen", "--n", "30", "--seed", "1", "--noise-sd", "0", "--out", d + "/z"}).code, 0);
    const auto ds = load_csv(d + "/z.csv");
    const auto truth = read_json(d + "/z.truth.json");
    for (Index k = 0; k < ds.points(); ++k) {
        EXPECT_DOUBLE_EQ(ds.y[k], vapnik_function(ds.x.col(k)));
        EXPECT_DOUBLE_EQ(ds.y[k], truth["noiseless"][static_cast<std::size_t>(k)].get<double>());
    }
}

TEST(CliFit, L1RecoversStructureAndWritesArtifacts) {
    const std::string d = dir("l1");
    ASSERT_EQ(invoke({"gen", "--n", "100", "--seed", "7", "--out", d + "/train"}).code, 0);
    const auto r = invoke({"fit", "--data", d + "/train.csv", "--method", "l1", "--xi", "1", "--sigma", "2", "--out",
                        d + "/m"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto metrics = read_json(d + "/m.metrics.json");
    EXPECT_EQ(metrics["S_D"], json({1, 2, 3, 4}));
    EXPECT_TRUE(metrics.contains("train"));
    EXPECT_EQ(metrics["components"].size(), 10u);
    EXPECT_TRUE(fs::exists(d + "/m.model.json"));
    EXPECT_TRUE(fs::exists(d + "/m.curves.csv"));
    const std::string curves = slurp(d + "/m.curves.csv");
    EXPECT_EQ(curves.substr(0, curves.find('\n')), "component,input,family,u,value");
}

TEST(CliFit, LssvmCvRecordsGamma) {
    const std::string d = dir("cv");
    ASSERT_EQ(invoke({"gen", "--n", "40", "--seed", "2", "--d", "4", "--out", d + "/t"}).code, 0);
    const auto r = invoke({"fit", "--data", d + "/t.csv", "--method", "lssvm", "--cv", "4", "--gamma-grid", "1,10,100",
                        "--sigma-grid", "1,2", "--out", d + "/m"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto metrics = read_json(d + "/m.metrics.json");
    const double g = metrics["hyperparameters"]["gamma"].get<double>();
    EXPECT_TRUE(g == 1.0 || g == 10.0 || g == 100.0);
    EXPECT_TRUE(metrics.contains("cv"));
    EXPECT_TRUE(fs::exists(d + "/m.cv.csv"));
}

TEST(CliFit, UsageErrors) {
    const std::string d = dir("usage");
    ASSERT_EQ(invoke({"gen", "--n", "20", "--seed", "2", "--d", "4", "--out", d + "/t"}).code, 0);
    EXPECT_EQ(invoke({"fit", "--data", d + "/t.csv", "--method", "l1"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"fit", "--data", d + "/t.csv", "--method", "lssvm"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"fit", "--data", d + "/t.csv", "--method", "fuse-areg"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"fit", "--data", d + "/t.csv", "--method", "bogus"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"fit", "--data", d + "/t.csv", "--method", "lssvm", "--gamma", "-1"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"fit", "--data", d + "/missing.csv", "--method", "lssvm", "--gamma", "1"}).code, cli::kExitIo);
}

TEST(CliPredict, RoundTripMatchesMetrics) {
    const std::string d = dir("pred");
    ASSERT_EQ(invoke({"gen", "--n", "50", "--seed", "4", "--d", "5", "--out", d + "/t"}).code, 0);
    ASSERT_EQ(invoke({"fit", "--data", d + "/t.csv", "--method", "lssvm", "--gamma", "20", "--sigma", "1.5", "--out",
                   d + "/m"})
                  .code,
              0);
    const auto r = invoke({"predict", "--model", d + "/m.model.json", "--data", d + "/t.csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "prediction");
    const Vector p = read_column(r.out);
    const auto metrics = read_json(d + "/m.metrics.json");
    ASSERT_EQ(p.size(), 50);
    for (Index k = 0; k < 50; ++k) {
        EXPECT_NEAR(p[k], metrics["train_predictions"][static_cast<std::size_t>(k)].get<double>(), 1e-10);
    }
    // same inputs without the target column
    const auto ds = load_csv(d + "/t.csv");
    std::ofstream f(d + "/x.csv");
    for (std::size_t j = 0; j < ds.names.size(); ++j) {
        f << (j ? "," : "") << ds.names[j];
    }
    f << '\n';
    f.precision(17);
    for (Index k = 0; k < ds.points(); ++k) {
        for (Index j = 0; j < ds.inputs(); ++j) {
            f << (j ? "," : "") << ds.x(j, k);
        }
        f << '\n';
    }
    f.close();
    const auto r2 = invoke({"predict", "--model", d + "/m.model.json", "--data", d + "/x.csv", "--out", d + "/p.csv"});
    ASSERT_EQ(r2.code, 0) << r2.err;
    EXPECT_LE((read_column(slurp(d + "/p.csv")) - p).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CliPredict, ConstantModelAndEmptyInput) {
    const std::string d = dir("const");
    std::ofstream(d + "/c.csv") << "a,b,y\n0.1,0.2,3\n0.5,0.1,3\n0.9,0.7,3\n0.3,0.3,3\n";
    ASSERT_EQ(invoke({"fit", "--data", d + "/c.csv", "--method", "l1", "--xi", "1", "--out", d + "/m"}).code, 0);
    std::ofstream(d + "/q.csv") << "a,b\n0.4,0.4\n7,-2\n";
    const auto r = invoke({"predict", "--model", d + "/m.model.json", "--data", d + "/q.csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Vector p = read_column(r.out);
    ASSERT_EQ(p.size(), 2);
    EXPECT_NEAR(p[0], 3.0, 1e-12);
    EXPECT_NEAR(p[1], 3.0, 1e-12);
    std::ofstream(d + "/e.csv") << "a,b\n";
    const auto e = invoke({"predict", "--model", d + "/m.model.json", "--data", d + "/e.csv"});
    EXPECT_EQ(e.code, 0);
    EXPECT_EQ(e.out, "");
}

TEST(CliPredict, DimensionMismatchNamesD) {
    const std::string d = dir("dim");
    ASSERT_EQ(invoke({"gen", "--n", "20", "--seed", "5", "--d", "4", "--out", d + "/t"}).code, 0);
    ASSERT_EQ(invoke({"fit", "--data", d + "/t.csv", "--method", "lssvm", "--gamma", "1", "--out", d + "/m"}).code, 0);
    std::ofstream(d + "/bad.csv") << "a,b\n1,2\n";
    const auto r = invoke({"predict", "--model", d + "/m.model.json", "--data", d + "/bad.csv"});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find("D = 4"), std::string::npos) << r.err;
    EXPECT_EQ(invoke({"predict", "--model", d + "/none.json", "--data", d + "/bad.csv"}).code, cli::kExitIo);
}

TEST(CliClassification, LabelMapPipelineWithScores) {
    const std::string d = dir("clf");
    Rng rng(8);
    std::ofstream f(d + "/mail.csv");
    f << "w1,w2,w3,class\n";
    for (int k = 0; k < 60; ++k) {
        const double a = rng.uniform(0, 5), b = rng.uniform(0, 5), c = rng.uniform(0, 5);
        f << a << ',' << b << ',' << c << ',' << (a > 2.5 ? "spam" : "ham") << '\n';
    }
    f.close();
    const auto r = invoke({"fit", "--data", d + "/mail.csv", "--method", "stp", "--task", "classification",
                        "--target", "class", "--label-map", "spam=1,ham=-1", "--preprocess", "--lambda", "1",
                        "--sigma", "1", "--out", d + "/m"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto metrics = read_json(d + "/m.metrics.json");
    EXPECT_GE(metrics["train"]["accuracy"].get<double>(), 0.9);
    EXPECT_TRUE(metrics.contains("train_scores"));
    const auto p = invoke({"predict", "--model", d + "/m.model.json", "--data", d + "/mail.csv", "--target", "class"});
    ASSERT_EQ(p.code, 0) << p.err;
    EXPECT_EQ(p.out.substr(0, p.out.find('\n')), "prediction,score");
    const Vector labels = read_column(p.out, 0);
    for (Index k = 0; k < labels.size(); ++k) {
        EXPECT_TRUE(labels[k] == 1.0 || labels[k] == -1.0);
    }
    EXPECT_EQ(invoke({"fit", "--data", d + "/mail.csv", "--method", "lssvm", "--gamma", "1", "--task",
                   "classification", "--target", "class", "--label-map", "spam"})
                  .code,
              cli::kExitUsage);
}

TEST(CliFusion, AregAndEtaRun) {
    const std::string d = dir("fusion");
    ASSERT_EQ(invoke({"gen", "--n", "40", "--seed", "1", "--d", "5", "--out", d + "/t"}).code, 0);
    ASSERT_EQ(invoke({"gen", "--n", "40", "--seed", "2", "--d", "5", "--out", d + "/v"}).code, 0);
    const auto a = invoke({"fit", "--data", d + "/t.csv", "--validation", d + "/v.csv", "--method", "fuse-areg",
                        "--sigma", "2", "--xi-grid", "0.5,1", "--gamma-grid", "10,100", "--out", d + "/a"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_TRUE(read_json(d + "/a.metrics.json").contains("validation"));
    const auto e = invoke({"fit", "--data", d + "/t.csv", "--validation", d + "/v.csv", "--method", "fuse-eta",
                        "--sigma", "2", "--gamma-grid", "10,100", "--max-outer", "5", "--out", d + "/e"});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_TRUE(fs::exists(d + "/e.eta_trace.csv"));
    const auto model = load_model(d + "/e.model.json");
    EXPECT_TRUE(model.eta.has_value());
    EXPECT_EQ(invoke({"fit", "--data", d + "/t.csv", "--validation", d + "/v.csv", "--method", "fuse-eta", "--cv",
                   "3"})
                  .code,
              cli::kExitUsage);
}
