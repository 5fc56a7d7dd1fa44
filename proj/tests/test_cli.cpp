// End-to-end checks of the command-line tool. The binary path arrives in
// HUBNET_CLI (set by the test harness); every run works inside a scratch
// directory under the system temp root.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

const fs::path& scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "hubnet_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CliResult run_cli(const std::string& args) {
  const char* bin = std::getenv("HUBNET_CLI");
  REQUIRE(bin != nullptr);
  const fs::path out_file = scratch() / "stdout.txt";
  const fs::path err_file = scratch() / "stderr.txt";
  const std::string cmd = std::string(bin) + " " + args + " >" +
                          out_file.string() + " 2>" + err_file.string();
  const int rc = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  result.out = slurp(out_file);
  result.err = slurp(err_file);
  return result;
}

}  // namespace

TEST_CASE("simulate writes a complete data set") {
  const fs::path dir = scratch() / "sim";
  const auto r = run_cli("simulate --scenario fig1 --seed 4 --out " +
                         dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.err.empty());
  for (const char* name :
       {"x_train.csv", "y_train.csv", "x_test.csv", "y_test.csv",
        "meta.json"}) {
    CHECK(fs::exists(dir / name));
  }
  const auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  CHECK(meta.at("scenario") == "fig1");
  CHECK(meta.at("n") == 60);
  CHECK(meta.at("p") == 40);
  CHECK(meta.at("true_support") == nlohmann::json::array({0, 1, 2}));
}

TEST_CASE("fit produces a full artifact for the two-stage method") {
  const fs::path dir = scratch() / "sim";  // written by the simulate case
  const fs::path out = scratch() / "fit.json";
  const auto r = run_cli("fit --x " + (dir / "x_train.csv").string() +
                         " --y " + (dir / "y_train.csv").string() +
                         " --method hubnet --cv-k 5 --cv-seed 2 --out " +
                         out.string());
  CHECK(r.exit_code == 0);
  CHECK(r.err.empty());

  const auto artifact = nlohmann::json::parse(slurp(out));
  CHECK(artifact.at("method") == "hubnet");
  CHECK(artifact.at("family") == "gaussian");
  CHECK(artifact.at("cv").contains("lambda_min"));
  CHECK(artifact.at("fit").contains("beta"));
  CHECK(artifact.at("fit").at("beta").size() == 40);
  REQUIRE(artifact.contains("hub"));
  CHECK(artifact.at("hub").at("weights").size() == 40);
  CHECK(artifact.at("hub").at("theta").get<double>() > 0.0);
  // Excluded features serialize their weight as -1.
  for (const auto& w : artifact.at("hub").at("weights")) {
    const double v = w.get<double>();
    CHECK((v > 0.0 || v == -1.0));
  }
}

TEST_CASE("fit on a plain baseline omits the hub block") {
  const fs::path dir = scratch() / "sim";
  const fs::path out = scratch() / "fit_lasso.json";
  const auto r = run_cli("fit --x " + (dir / "x_train.csv").string() +
                         " --y " + (dir / "y_train.csv").string() +
                         " --method lasso --cv-k 5 --out " + out.string());
  CHECK(r.exit_code == 0);
  const auto artifact = nlohmann::json::parse(slurp(out));
  CHECK_FALSE(artifact.contains("hub"));
}

TEST_CASE("bench emits one deterministic row per method") {
  const fs::path out1 = scratch() / "bench1.csv";
  const fs::path out2 = scratch() / "bench2.csv";
  const std::string flags =
      "bench --scenario fig1 --reps 2 --methods lasso,hubnet --seed 11 "
      "--cv-k 5 --out ";
  CHECK(run_cli(flags + out1.string()).exit_code == 0);
  CHECK(run_cli(flags + out2.string()).exit_code == 0);

  const std::string body = slurp(out1);
  CHECK(body == slurp(out2));
  std::istringstream lines(body);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "method,cvm,cvm_se,fn,fp,features,test_error,test_error_se");
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rfind("hubnet,", 0) == 0);
  CHECK(rows[1].rfind("lasso,", 0) == 0);
}

TEST_CASE("recover tabulates theta curves per replicate") {
  const fs::path out1 = scratch() / "rec1.csv";
  const fs::path out2 = scratch() / "rec2.csv";
  const std::string flags =
      "recover --setting s3 --n 40 --p 16 --s 2 --gamma 0 --reps 2 "
      "--seed 5 --out ";
  CHECK(run_cli(flags + out1.string()).exit_code == 0);
  CHECK(run_cli(flags + out2.string()).exit_code == 0);
  const std::string body = slurp(out1);
  CHECK(body == slurp(out2));

  std::istringstream lines(body);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "rep,theta,correct_hubs,max_hub_rank,active_rows");
  int count = 0;
  bool saw_rep1 = false;
  while (std::getline(lines, line)) {
    ++count;
    if (line.rfind("1,", 0) == 0) saw_rep1 = true;
  }
  CHECK(count > 0);
  CHECK(saw_rep1);
}

TEST_CASE("paths reports selection error along the grid") {
  const fs::path out = scratch() / "paths.csv";
  const auto r = run_cli(
      "paths --scenario fig1 --method lasso --seed 9 --out " + out.string());
  CHECK(r.exit_code == 0);

  std::istringstream lines(slurp(out));
  std::string line;
  std::getline(lines, line);
  CHECK(line == "lambda,nonzero,fp,fn");
  REQUIRE(std::getline(lines, line));
  // The path starts at the null model: nothing selected, everything missed.
  CHECK(line.find(",0,0,1") != std::string::npos);
}

TEST_CASE("config files supply defaults but flags win") {
  const fs::path cfg = scratch() / "sim.json";
  {
    std::ofstream out(cfg);
    out << R"({"scenario": "fig1", "seed": 4, "out": ")"
        << (scratch() / "sim_cfg").string() << R"("})";
  }
  const auto r = run_cli("simulate --config " + cfg.string());
  CHECK(r.exit_code == 0);
  // Identical spec and seed as the flag-driven run: identical bytes.
  CHECK(slurp(scratch() / "sim_cfg" / "x_train.csv") ==
        slurp(scratch() / "sim" / "x_train.csv"));

  const auto override_run =
      run_cli("simulate --seed 5 --config " + cfg.string());
  CHECK(override_run.exit_code == 0);
  CHECK(slurp(scratch() / "sim_cfg" / "x_train.csv") !=
        slurp(scratch() / "sim" / "x_train.csv"));

  const fs::path bad = scratch() / "bad.json";
  {
    std::ofstream out(bad);
    out << R"({"scenario": "fig1", "out": "x", "bogus-key": 1})";
  }
  const auto rejected = run_cli("simulate --config " + bad.string());
  CHECK(rejected.exit_code == 2);
  CHECK(nlohmann::json::parse(rejected.err)
            .at("error")
            .at("message")
            .get<std::string>()
            .find("bogus-key") != std::string::npos);
}

TEST_CASE("failures leave as json on stderr with exit code 2") {
  const auto r = run_cli("simulate --scenario nosuch --out " +
                         (scratch() / "never").string());
  CHECK(r.exit_code == 2);
  const auto err = nlohmann::json::parse(r.err);
  CHECK(err.at("error").at("kind") == "InvalidSpec");

  const auto missing = run_cli("fit --x missing.csv --y missing.csv --out " +
                               (scratch() / "never.json").string());
  CHECK(missing.exit_code == 2);
  CHECK(nlohmann::json::parse(missing.err).at("error").at("kind") == "Io");

  const auto family = run_cli(
      "fit --x missing.csv --y missing.csv --family poisson --out " +
      (scratch() / "never.json").string());
  CHECK(family.exit_code == 2);
}
