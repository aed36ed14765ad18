#include "doctest.h"

#include "moenet/error.hpp"
#include "support.hpp"

using namespace moenet;

namespace {

const char* kModel = R"({"name": "m", "num_layers": 4, "num_dense_layers": 1, "hidden_dim": 256,
  "num_experts": 8, "top_k": 2, "expert_ffn_dim": 128, "num_shared_experts": 1,
  "dense_ffn_dim": 512, "num_heads": 4, "q_lora_rank": 64, "kv_lora_rank": 32,
  "qk_nope_head_dim": 16, "qk_rope_head_dim": 8, "v_head_dim": 16, "vocab_size": 1000,
  "kv_bytes_per_token": 80, "param_bytes_total": 4e6})";

std::string config_with(const std::string& extra) {
  return std::string(R"({"model": )") + kModel + extra + "}";
}

std::string error_of(const std::string& text) {
  try {
    (void)parse_config(text, "cfg.json", "");
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("default configuration") {
  const auto c = load_config(test::source_path("configs/default.json"));
  CHECK(c.model.num_layers == 61);
  CHECK(c.model.num_experts == 256);
  CHECK(c.topologies.size() == 4);
  CHECK(c.scenarios.size() == 6);
  CHECK(c.cluster_sizes == std::vector<int>{64, 256});
  REQUIRE(c.bandwidth_multipliers.size() == 6);
  CHECK(c.bandwidth_multipliers[0] == 1.0 / 9);
  CHECK(c.bandwidth_multipliers[4] == 4.0 / 3);
  CHECK(c.topologies[1].link_share == 50.0 / 450);
  CHECK(c.topologies[2].dims.at(256).str() == "8x8x4");
  CHECK(c.calibration.eff_c == 0.5);
  CHECK(c.sources.size() == 2);
  CHECK(c.scenarios[3].tpot_slo == doctest::Approx(15e-3));
  CHECK(c.scenarios[3].context_length == 4096);

  const auto axes = grid_axes(c);
  CHECK(grid_cells(axes).size() == 4 * 2 * 6 * 6);
  const auto base = grid_base(c, nullptr);
  CHECK(base.cost.aoc_multiplier == 6.7);
}

TEST_CASE("inline model and sections") {
  const auto c = parse_config(config_with(R"(,
    "hardware": {"peak_flops": 1e15, "compute_efficiency": 0.6},
    "topologies": [{"name": "t", "kind": "torus3d", "dims": {"8": [2, 2, 2]}, "link_share": 0.5}],
    "scenarios": [{"name": "a", "tpot_slo_ms": 20, "context_length": 128, "spec_m": 3}],
    "sweep": {"cluster_sizes": [8], "bandwidth_multipliers": [0.5, "3/2"], "modes": ["noopt", "dbo"],
              "alpha_scale": 0.5, "alpha_beta": {"intra": {"alpha0_us": 1}}}
  )"), "cfg.json", "");
  CHECK(c.hardware.peak_flops == 1e15);
  CHECK(c.calibration.eff_c == 0.6);
  CHECK(c.model.name == "m");
  CHECK(c.topologies[0].dims.at(8).volume() == 8);
  CHECK(c.scenarios[0].sd.spec_m == 3);
  CHECK(c.bandwidth_multipliers == std::vector<double>{0.5, 1.5});
  CHECK(c.mode_sets.size() == 2);
  CHECK(c.alpha_scale == 0.5);
  CHECK(c.intra.alpha0 == doctest::Approx(1e-6));
  CHECK(c.intra.alpha_r == AlphaBetaParams::intra_node().alpha_r);
}

TEST_CASE("ratios") {
  CHECK(*parse_ratio("0.25") == 0.25);
  CHECK(*parse_ratio("1/3") == 1.0 / 3);
  CHECK(*parse_ratio("50/450") == 50.0 / 450);
  CHECK(!parse_ratio("1/0"));
  CHECK(!parse_ratio("a/3"));
  CHECK(!parse_ratio("2x"));
  CHECK(!parse_ratio(""));
}

TEST_CASE("config errors name the offending field") {
  CHECK(error_of(config_with(R"(, "sweep": {"cluster_size": [8]})")) ==
        "invalid-config: cfg.json: sweep.cluster_size: unknown field");
  CHECK(error_of(config_with(R"(, "costs": {"pue": "high"})")) ==
        "invalid-config: cfg.json: costs.pue: expected a number");
  CHECK(error_of(config_with(R"(, "topologies": [{"name": "x", "kind": "ring"}])")) ==
        "invalid-config: cfg.json: topologies[0].kind: unknown topology kind 'ring'");
  CHECK(error_of(config_with(R"(, "scenarios": [{"name": "x", "context_length": 1}])")) ==
        "invalid-config: cfg.json: scenarios[0].tpot_slo_ms: missing required field");
  CHECK(error_of(config_with(R"(, "sweep": {"bandwidth_multipliers": ["x"]})"))
            .find("sweep.bandwidth_multipliers[0]") != std::string::npos);
  CHECK(error_of(config_with(R"(, "sweep": {"modes": ["fast"]})")).find("unknown mode set") !=
        std::string::npos);
  CHECK(error_of(config_with(R"(, "topologies": [{"name": "x", "kind": "torus3d", "dims": {"a": [1, 1, 1]}}])"))
            .find("cluster size keys") != std::string::npos);
  CHECK(error_of("{}") == "invalid-config: cfg.json: model: missing required field");
}

TEST_CASE("syntax errors report a line") {
  const auto e = error_of("{\n  \"model\": {\n    \"name\": ,\n  }\n}");
  CHECK(e.rfind("parse-error: cfg.json:3: syntax error", 0) == 0);
}

TEST_CASE("semantic validation") {
  CHECK(error_of(config_with(R"(, "scenarios": [{"name": "a", "tpot_slo_ms": 10, "context_length": 8},
                                                {"name": "a", "tpot_slo_ms": 20, "context_length": 8}])"))
            .find("duplicate name 'a'") != std::string::npos);
  CHECK(error_of(config_with(R"(, "topologies": [{"name": "t", "kind": "scaleup"}, {"name": "t", "kind": "torus3d"}])"))
            .find("duplicate name 't'") != std::string::npos);
  CHECK(error_of(config_with(R"(, "scenarios": [{"name": "a", "tpot_slo_ms": -1, "context_length": 8}])"))
            .find("tpot_slo must be positive") != std::string::npos);
  CHECK(error_of(config_with(R"(, "sweep": {"alpha_scale": 2})")).find("alpha_scale") != std::string::npos);
  CHECK(error_of(config_with(R"(, "costs": {"aoc_multiplier": 0.5})")).find("costs") != std::string::npos);
  CHECK(error_of(config_with(R"(, "topologies": [{"name": "t", "kind": "scaleup", "link_share": 0}])"))
            .find("link_share") != std::string::npos);
  CHECK_THROWS_AS((void)load_config("/nonexistent/moenet.json"), Error);
}

TEST_CASE("model files") {
  const auto m = parse_model(kModel, "m.json");
  CHECK(m.num_moe_layers() == 3);
  try {
    (void)parse_model(R"({"num_layers": 2, "num_experts": 4, "top_k": 8})", "bad.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidConfig);
    CHECK(std::string(e.what()).rfind("invalid-config: bad.json", 0) == 0);
  }
}
