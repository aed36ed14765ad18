#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "moenet/cli.hpp"
#include "moenet/report.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "moenet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = moenet::run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("moenet-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::string kTiny = test::source_path("tests/data/tiny.json");

using Table = std::vector<std::map<std::string, std::string>>;

Table read_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> cols;
  std::stringstream hs(line);
  for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
  Table t;
  while (std::getline(in, line)) {
    std::map<std::string, std::string> row;
    std::stringstream ls(line);
    std::size_t i = 0;
    for (std::string v; i < cols.size(); ++i) {
      if (!std::getline(ls, v, ',')) v.clear();
      row[cols[i]] = v;
    }
    t.push_back(row);
  }
  return t;
}

double num(const std::map<std::string, std::string>& r, const char* key) {
  return std::stod(r.at(key));
}

}  // namespace

TEST_CASE("usage and exit codes") {
  CHECK(cli({}).code == moenet::kExitUsage);
  CHECK(cli({"--help"}).code == moenet::kExitOk);
  CHECK(cli({"frobnicate"}).code == moenet::kExitUsage);
  CHECK(cli({"pareto", "--config", "/nonexistent.json"}).code == moenet::kExitUsage);
  const auto out = scratch("codes");
  CHECK(cli({"pareto", "-c", kTiny, "-o", out.string(), "--scenario", "nope"}).code == moenet::kExitUsage);
  CHECK(cli({"project", "-c", kTiny, "-o", out.string(), "--generation", "volta"}).code ==
        moenet::kExitUsage);
  CHECK(cli({"pareto", "-c", kTiny, "-o", out.string(), "--multipliers", "1/0"}).code ==
        moenet::kExitUsage);
  const auto slow = cli({"compare-topologies", "-c", kTiny, "-o", out.string(), "--tpot-ms", "0.01"});
  CHECK(slow.code == moenet::kExitInfeasible);
  CHECK(slow.out.find("(0 feasible)") != std::string::npos);
  CHECK(cli({"dump-schedule", "-c", kTiny, "-o", out.string(), "--ep", "8", "--batch", "1"}).code ==
        moenet::kExitUsage);
}

TEST_CASE("pareto run writes consistent reports") {
  const auto dir = scratch("pareto");
  const auto r = cli({"pareto", "-c", kTiny, "-o", dir.string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"pareto.csv", "pareto.json", "pareto.manifest.json"}) CHECK(fs::exists(dir / f));

  const auto rows = read_csv(dir / "pareto.csv");
  REQUIRE(rows.size() == 3 * 3 * 2);
  const auto json = nlohmann::json::parse(slurp(dir / "pareto.json"));
  REQUIRE(json.size() == rows.size());
  const auto manifest = nlohmann::json::parse(slurp(dir / "pareto.manifest.json"));
  CHECK(manifest["csv_hash"] == moenet::content_hash(slurp(dir / "pareto.csv")));
  CHECK(manifest["config_files"][0] == kTiny);

  // Recompute the flags from the table itself.
  std::map<std::string, std::pair<double, std::size_t>> best;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    CHECK(json[i]["throughput"].get<double>() == doctest::Approx(num(row, "throughput")));
    if (row.at("feasible") != "1") continue;
    const auto key = row.at("topology") + "|" + row.at("xpu_count") + "|" + row.at("scenario");
    const double v = num(row, "throughput_per_cost");
    auto it = best.find(key);
    if (it == best.end() || v > it->second.first) best[key] = {v, i};
  }
  std::size_t sweet = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sweet += rows[i].at("sweet_spot") == "1";
    if (rows[i].at("sweet_spot") == "1") {
      const auto key =
          rows[i].at("topology") + "|" + rows[i].at("xpu_count") + "|" + rows[i].at("scenario");
      CHECK(best.at(key).second == i);
    }
  }
  CHECK(sweet == best.size());
  CHECK(r.out.find("sweet spot") != std::string::npos);

  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].at("feasible") != "1") continue;
    bool dominated = false;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (rows[j].at("feasible") != "1" || rows[j].at("scenario") != rows[i].at("scenario")) continue;
      const double ci = num(rows[i], "cost_per_xpu"), ti = num(rows[i], "throughput_per_xpu");
      const double cj = num(rows[j], "cost_per_xpu"), tj = num(rows[j], "throughput_per_xpu");
      if (cj <= ci && tj >= ti && (cj < ci || tj > ti)) dominated = true;
    }
    if (dominated) CHECK(rows[i].at("pareto") == "0");
  }
}

TEST_CASE("reports are deterministic") {
  const auto a = scratch("det-a"), b = scratch("det-b");
  REQUIRE(cli({"pareto", "-c", kTiny, "-o", a.string()}).code == 0);
  REQUIRE(cli({"pareto", "-c", kTiny, "-o", b.string(), "--serial"}).code == 0);
  CHECK(slurp(a / "pareto.csv") == slurp(b / "pareto.csv"));
  CHECK(slurp(a / "pareto.json") == slurp(b / "pareto.json"));

  const auto c = scratch("det-c");
  REQUIRE(cli({"pareto", "-c", kTiny, "-o", c.string(), "--alpha-scale", "1"}).code == 0);
  CHECK(slurp(a / "pareto.csv") == slurp(c / "pareto.csv"));
}

TEST_CASE("output directory from the environment") {
  const auto dir = scratch("env");
  ::setenv("MOENET_OUT_DIR", dir.string().c_str(), 1);
  const auto r = cli({"compare-topologies", "-c", kTiny});
  ::unsetenv("MOENET_OUT_DIR");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "compare-topologies.csv"));
  const auto rows = read_csv(dir / "compare-topologies.csv");
  CHECK(rows.size() == 3 * 2);
  for (const auto& row : rows) CHECK(num(row, "bw_multiplier") == 1);
  CHECK(r.out.find("sweet spot") == std::string::npos);
}

TEST_CASE("subcommand axes") {
  const auto dir = scratch("axes");
  REQUIRE(cli({"sweep-bandwidth", "-c", kTiny, "-o", dir.string(), "--scenario", "loose"}).code == 0);
  const auto sweep = read_csv(dir / "sweep-bandwidth.csv");
  REQUIRE(sweep.size() == 6);
  for (const auto& row : sweep) CHECK(row.at("topology") == "scale-up");
  CHECK(num(sweep[0], "bw_multiplier") == doctest::Approx(1.0 / 9));

  REQUIRE(cli({"project", "-c", kTiny, "-o", dir.string(), "--generation", "rubin",
               "--topology", "torus", "--multipliers", "1", "--modes", "noopt"})
              .code == 0);
  const auto proj = read_csv(dir / "project.csv");
  REQUIRE(proj.size() == 2);
  for (const auto& row : proj) {
    CHECK(row.at("generation") == "rubin");
    CHECK(num(row, "bandwidth_gbps") == doctest::Approx(4.0));
    CHECK(row.at("modes") == "noopt");
  }

  REQUIRE(cli({"pareto", "-c", kTiny, "-o", dir.string(), "--tpot-ms", "5", "--context", "64"}).code == 0);
  const auto over = read_csv(dir / "pareto.csv");
  REQUIRE(over.size() == 9);
  for (const auto& row : over) {
    CHECK(num(row, "tpot_slo_ms") == 5);
    CHECK(row.at("context_length") == "64");
  }
}

TEST_CASE("dump-schedule writes a valid schedule") {
  const auto dir = scratch("dump");
  const auto r = cli({"dump-schedule", "-c", kTiny, "-o", dir.string(), "--ep", "8", "--batch", "41",
                      "--multiplier", "1/3"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "schedule.json"));
  CHECK(j["ep"] == 8);
  CHECK(j["microbatches"] == nlohmann::json::array({21, 20}));
  CHECK(j["bandwidth_gbps"].get<double>() == doctest::Approx(1.0 / 3));
  const auto& ops = j["schedule"]["ops"];
  REQUIRE(!ops.empty());
  double lane_end[2]{0, 0}, chain_end[2]{0, 0}, makespan = 0;
  for (const auto& op : ops) {
    const int lane = op["lane"] == "comm";
    const int mb = op["microbatch"];
    const double s = op["start_s"], e = op["end_s"];
    CHECK(s >= lane_end[lane]);
    CHECK(s >= chain_end[mb]);
    CHECK(e >= s);
    lane_end[lane] = e;
    chain_end[mb] = e;
    makespan = std::max(makespan, e);
  }
  CHECK(makespan == j["tpot_s"].get<double>());
  CHECK(j["exposed_comm_s"].get<double>() >= 0);
}
