#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>

#include <json.hpp>

#include "effect_engine/error.hpp"
#include "effect_engine/io/config.hpp"
#include "effect_engine/io/csv.hpp"
#include "effect_engine/io/run.hpp"
#include "effect_engine/predicate.hpp"
#include "fixtures.hpp"

using namespace effect_engine;
using namespace effect_engine::io;

namespace {

const char* kFourRows = "y,w\n1,0\n3,0\n4,1\n6,1\n";

const char* kAteConfig = R"({
  "columns": {"outcome": "y", "arm": "w"},
  "model": {"reference_arm": "0", "covariance": "classical"},
  "queries": [{"type": "ate", "arms": ["1", "0"]}]
})";

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "<no error>";
}

}  // namespace

TEST(Predicate, ParseAndPrint) {
  auto p = Predicate::parse("x >= 3 && g == \"a b\" && h != c");
  ASSERT_EQ(p.conditions().size(), 3u);
  EXPECT_EQ(p.conditions()[0].op, CompareOp::ge);
  EXPECT_EQ(std::get<double>(p.conditions()[0].literal), 3.0);
  EXPECT_EQ(std::get<std::string>(p.conditions()[1].literal), "a b");
  EXPECT_EQ(std::get<std::string>(p.conditions()[2].literal), "c");
  EXPECT_TRUE(Predicate::parse("").is_always());
  EXPECT_TRUE(Predicate::parse("true").is_always());
  EXPECT_EQ(Predicate::always().to_string(), "true");
  EXPECT_EQ(Predicate::parse(Predicate::parse("x < 2 && g == \"a\"").to_string()).to_string(),
            Predicate::parse("x < 2 && g == \"a\"").to_string());
  EXPECT_THROW(Predicate::parse("x >"), ValidationError);
  EXPECT_THROW(Predicate::parse("x ~ 3"), ValidationError);
  EXPECT_THROW(Predicate::parse("x > 1 || y < 2"), ValidationError);
  EXPECT_THROW(Predicate::parse("(x > 1)"), ValidationError);
  EXPECT_THROW(Predicate::parse("g == \"open"), ValidationError);
  EXPECT_EQ(std::get<std::string>(Predicate::parse("g == \"a && b\"").conditions()[0].literal), "a && b");
}

TEST(Predicate, Evaluate) {
  Dataset data({1, 2, 3}, {"a", "b", "a"},
               {CovariateColumn{"x", std::vector<double>{1, 5, 3}},
                CovariateColumn{"g", std::vector<std::string>{"u", "v", "u"}}},
               std::nullopt, std::vector<std::int64_t>{1, 2, 2});
  EXPECT_EQ(Predicate::parse("x > 2").evaluate(data), (std::vector<bool>{false, true, true}));
  EXPECT_EQ(Predicate::parse("g == u && period == 2").evaluate(data),
            (std::vector<bool>{false, false, true}));
  EXPECT_EQ(select_rows(data, Predicate::parse("x > 2"), true), std::vector<std::size_t>{0});
  EXPECT_THROW(Predicate::parse("nope == 1").evaluate(data), ValidationError);
  EXPECT_THROW(Predicate::parse("g > 1").evaluate(data), ValidationError);
  EXPECT_THROW(Predicate::parse("x == u").evaluate(data), ValidationError);
}

TEST(Csv, Rfc4180Quoting) {
  auto rows = parse_csv("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\n\"multi\nline\",\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "x,1");
  EXPECT_EQ(rows[1][1], "say \"hi\"");
  EXPECT_EQ(rows[2][0], "multi\nline");
  EXPECT_EQ(rows[2][1], "");
  EXPECT_THROW(parse_csv("a\n\"open"), ValidationError);
  EXPECT_THROW(parse_csv("a\nb\"c\n"), ValidationError);
}

TEST(Csv, FourRowDataset) {
  auto data = dataset_from_csv(kFourRows, ColumnMap{"y", "w"});
  EXPECT_EQ(data.size(), 4u);
  EXPECT_EQ(data.arm_labels(), (std::vector<std::string>{"0", "1"}));
  EXPECT_TRUE(data.covariates().empty());
}

TEST(Csv, TypeInferenceAndBom) {
  auto data = dataset_from_csv("\xEF\xBB\xBFy,w,x,g\n1,a,1.5,lo\n2,b,2,hi\n3,a,-1e2,lo\n",
                               ColumnMap{"y", "w"});
  ASSERT_EQ(data.covariates().size(), 2u);
  EXPECT_TRUE(data.covariates()[0].is_numeric());
  EXPECT_EQ(data.covariates()[0].numeric()[2], -100.0);
  EXPECT_FALSE(data.covariates()[1].is_numeric());
  EXPECT_EQ(data.covariates()[1].labels()[1], "hi");
}

TEST(Csv, ErrorsNameRowAndColumn) {
  auto msg = error_of([] { dataset_from_csv("y,w\n1,0\nNA,1\n", ColumnMap{"y", "w"}); });
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("'y'"), std::string::npos) << msg;
  msg = error_of([] { dataset_from_csv("y,w\n1,0\n", ColumnMap{"y", "arm"}); });
  EXPECT_NE(msg.find("missing column 'arm'"), std::string::npos) << msg;
  EXPECT_THROW(dataset_from_csv("", ColumnMap{"y", "w"}), ValidationError);
  EXPECT_THROW(dataset_from_csv("y,w\n", ColumnMap{"y", "w"}), ValidationError);
  EXPECT_THROW(dataset_from_csv("y,w\n1,0,3\n", ColumnMap{"y", "w"}), ValidationError);
  EXPECT_THROW(dataset_from_csv("y,w,x\n1,0,\n2,1,3\n", ColumnMap{"y", "w"}), ValidationError);
  EXPECT_THROW(dataset_from_csv("y,w,t\n1,0,1.5\n2,1,2\n", ColumnMap{"y", "w", {}, {}, "t"}),
               ValidationError);
}

TEST(Config, ParsesDefaults) {
  auto c = parse_config(kAteConfig);
  EXPECT_EQ(c.model.reference_arm, "0");
  EXPECT_EQ(c.model.covariance_kind, CovarianceKind::classical);
  ASSERT_EQ(c.queries.size(), 1u);
  EXPECT_EQ(c.queries[0].type, QueryType::ate);
  EXPECT_EQ(c.queries[0].ci_level, 0.95);
  EXPECT_EQ(c.output.path, "report.json");
  EXPECT_EQ(c.seed, 0u);
}

TEST(Config, RejectsBadInput) {
  auto with = [](const std::string& patch) {
    auto j = nlohmann::json::parse(kAteConfig);
    j.merge_patch(nlohmann::json::parse(patch));
    return j.dump();
  };
  EXPECT_THROW(parse_config("{"), ValidationError);
  EXPECT_THROW(parse_config(with(R"({"surprise": 1})")), ValidationError);
  EXPECT_THROW(parse_config(with(R"({"model": {"reference_arm": null}})")), ValidationError);
  EXPECT_THROW(parse_config(with(R"({"model": {"covariance": "hc3"}})")), ValidationError);
  EXPECT_THROW(parse_config(with(R"({"queries": []})")), ValidationError);
  EXPECT_THROW(parse_config(with(R"({"queries": [{"type": "ate", "arms": ["1"]}]})")), ValidationError);
  EXPECT_THROW(parse_config(with(R"({"queries": [{"type": "cate", "arms": ["1", "0"]}]})")), ValidationError);
  EXPECT_THROW(parse_config(with(R"({"queries": [{"type": "ate", "arms": ["1", "0"], "ci_level": 1.5}]})")),
               ValidationError);
  EXPECT_THROW(parse_config(with(R"({"queries": [{"type": "dte", "arms": ["1", "0"], "periods": [1]}]})")),
               ValidationError);
  EXPECT_THROW(parse_config(with(R"({"queries": [{"type": "median", "arms": ["1", "0"]}]})")),
               ValidationError);
  EXPECT_THROW(parse_config(with(R"({"seed": -1})")), ValidationError);
  EXPECT_THROW(parse_config(with(R"({"output": {"format": "xml"}})")), ValidationError);
}

TEST(Config, BayesBroadcast) {
  auto j = nlohmann::json::parse(kAteConfig);
  j["model"]["bayes"] = {{"prior_mean", 1.5}, {"prior_variance", 4}, {"noise_variance", 2}};
  auto c = parse_config(j.dump());
  ASSERT_TRUE(c.model.bayes);
  auto prior = c.model.bayes->resolve(3);
  EXPECT_EQ(prior.prior_mean, Eigen::Vector3d::Constant(1.5));
  EXPECT_EQ(prior.prior_covariance, Eigen::Matrix3d::Identity() * 4);
  EXPECT_EQ(prior.noise_variance, 2.0);
  j["model"]["bayes"]["prior_mean"] = {1, 2};
  EXPECT_THROW(parse_config(j.dump()).model.bayes->resolve(3), ValidationError);
}

TEST(Config, CheckedAgainstData) {
  auto data = fixtures::four_rows();
  auto j = nlohmann::json::parse(kAteConfig);
  j["model"]["reference_arm"] = "control";
  EXPECT_THROW(check_config_against(parse_config(j.dump()), data), ValidationError);
  j = nlohmann::json::parse(kAteConfig);
  j["queries"][0]["arms"] = {"2", "0"};
  EXPECT_THROW(check_config_against(parse_config(j.dump()), data), ValidationError);
}

TEST(Report, FourRowAte) {
  auto config = parse_config(kAteConfig);
  auto data = dataset_from_csv(kFourRows, config.columns);
  auto report = nlohmann::json::parse(build_report(data, config, kFourRows, kAteConfig, {}));
  const auto& r = report["results"][0];
  EXPECT_EQ(r["status"], "ok");
  EXPECT_NEAR(r["estimate"].get<double>(), 3.0, 1e-12);
  EXPECT_NEAR(r["std_error"].get<double>(), 1.4142135623730951, 1e-12);
  EXPECT_EQ(report["metadata"]["input_digest"],
            "sha256:" + sha256_hex(kFourRows));
}

TEST(Report, NumbersUseSeventeenDigits) {
  auto config = parse_config(kAteConfig);
  auto data = dataset_from_csv(kFourRows, config.columns);
  auto text = build_report(data, config, kFourRows, kAteConfig, {});
  std::smatch m;
  ASSERT_TRUE(std::regex_search(text, m, std::regex("\"std_error\": ([0-9.e+-]+)")));
  EXPECT_EQ(m[1].str(), "1.4142135623730951");
  EXPECT_EQ(std::stod(m[1].str()), std::sqrt(2.0));
}

TEST(Report, RankNeedsPosteriorOrFlag) {
  auto j = nlohmann::json::parse(kAteConfig);
  j["queries"] = {{{"type", "rank"}}};
  auto config = parse_config(j.dump());
  auto data = dataset_from_csv(kFourRows, config.columns);
  auto msg = error_of([&] { build_report(data, config, kFourRows, j.dump(), {}); });
  EXPECT_NE(msg.find("--flat-prior-ok"), std::string::npos) << msg;
  RunOptions flat;
  flat.flat_prior_ok = true;
  auto report = nlohmann::json::parse(build_report(data, config, kFourRows, j.dump(), flat));
  EXPECT_EQ(report["results"][0]["ranking"].size(), 2u);
  EXPECT_FALSE(report["warnings"].empty());
}

TEST(Report, PartialRecordsFailures) {
  Dataset data({1, 3, 4, 6, 2, 5}, {"0", "0", "1", "1", "0", "1"},
               {CovariateColumn{"x", std::vector<double>{1, 2, 1, 2, 3, 3}}});
  auto j = nlohmann::json::parse(kAteConfig);
  j["queries"] = {{{"type", "ate"}, {"arms", {"1", "0"}}},
                  {{"type", "cate"}, {"arms", {"1", "0"}}, {"predicate", "x > 10"}}};
  auto config = parse_config(j.dump());
  EXPECT_THROW(build_report(data, config, "", j.dump(), {}), NumericError);
  RunOptions partial;
  partial.partial = true;
  auto report = nlohmann::json::parse(build_report(data, config, "", j.dump(), partial));
  EXPECT_EQ(report["results"][0]["status"], "ok");
  EXPECT_EQ(report["results"][1]["status"], "error");
  EXPECT_EQ(report["results"][1]["error_kind"], "validation");
}

TEST(Report, ReusesFitsAcrossQueries) {
  auto j = nlohmann::json::parse(kAteConfig);
  j["queries"] = {{{"type", "ate"}, {"arms", {"1", "0"}}},
                  {{"type", "ate"}, {"arms", {"0", "1"}}},
                  {{"type", "ate"}, {"arms", {"0", "1"}}, {"covariance", "hc1"}}};
  auto config = parse_config(j.dump());
  auto data = dataset_from_csv(kFourRows, config.columns);
  auto report = nlohmann::json::parse(build_report(data, config, kFourRows, j.dump(), {}));
  ASSERT_EQ(report["models"].size(), 2u);
  EXPECT_EQ(report["models"][0]["id"], "ols_classical");
  EXPECT_EQ(report["models"][1]["id"], "ols_hc1");
}

TEST(Run, ExitCodesAndAtomicWrite) {
  auto dir = std::filesystem::temp_directory_path() / "effect_engine_io_test";
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return dir / name;
  };
  RunOptions options;
  options.data_path = write("d.csv", kFourRows);
  options.config_path = write("c.json", kAteConfig);
  options.out_path = dir / "out.json";
  auto ok = run(options);
  EXPECT_EQ(ok.exit_code, 0) << ok.message;
  EXPECT_TRUE(std::filesystem::exists(dir / "out.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "out.json.tmp"));

  options.config_path = write("bad.json", "{\"columns\": 3}");
  EXPECT_EQ(run(options).exit_code, 1);
  options.config_path = dir / "missing.json";
  EXPECT_EQ(run(options).exit_code, 1);

  options.data_path = write("d2.csv", "y,w,x\n1,0,1\n3,0,2\n4,1,1\n6,1,2\n");
  options.config_path = write(
      "cate.json",
      R"({"columns": {"outcome": "y", "arm": "w"}, "model": {"reference_arm": "0"},
          "queries": [{"type": "cate", "arms": ["1", "0"], "predicate": "x > 5"}]})");
  EXPECT_EQ(run(options).exit_code, 2);
  std::filesystem::remove_all(dir);
}

TEST(Render, TextReport) {
  auto config = parse_config(kAteConfig);
  auto data = dataset_from_csv(kFourRows, config.columns);
  auto text = render_text(build_report(data, config, kFourRows, kAteConfig, {}));
  EXPECT_NE(text.find("ate [\"1\",\"0\"]: 3"), std::string::npos) << text;
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
