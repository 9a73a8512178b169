#include <cmath>

#include "doctest.h"

#include "ddcl/errors.hpp"
#include "ddcl/report.hpp"

using namespace ddcl;

namespace {

TrainTrace small_trace(bool labels, bool streaming) {
  TrainTrace t;
  for (int e = 0; e < 3; ++e) {
    TraceRow r;
    r.epoch = e;
    r.T = 1.0;
    r.l_q = 2.0;
    r.l_ols = 1.5;
    r.v = 0.5;
    r.s = 3.0 + e;
    r.k_mean = 0.6;
    r.i_mean = 0.4;
    r.grad_pv_norm = 0.1;
    if (labels) r.acc = r.nmi = r.ari = 0.5;
    if (streaming) r.samples_seen = 50.0 * (e + 1);
    t.rows.push_back(r);
  }
  return t;
}

}  // namespace

TEST_CASE("trace CSV validates against its own schema") {
  for (bool streaming : {false, true})
    for (bool labels : {false, true}) {
      const std::string csv = trace_csv(small_trace(labels, streaming), streaming);
      CHECK(validate_trace_csv(csv, streaming).empty());
    }
  CHECK(trace_columns(true).back() == "samples_seen");
  CHECK(trace_columns(false).size() == 12);
}

TEST_CASE("schema validation rejects malformed traces") {
  const std::string good = trace_csv(small_trace(true, false));
  CHECK_FALSE(validate_trace_csv("", false).empty());
  CHECK_FALSE(validate_trace_csv("epoch,T\n0,1\n", false).empty());
  const std::string header = good.substr(0, good.find('\n') + 1);
  CHECK_FALSE(validate_trace_csv(header + "0,1,2,1.5,0.5,3,0.6,0.4,0.1,0.5,0.5\n").empty());
  CHECK_FALSE(validate_trace_csv(header + "0,1,2,1.5,-0.5,3,0.6,0.4,0.1,,,\n").empty());
  CHECK_FALSE(validate_trace_csv(header + "0,1,2,1.5,0.5,,0.6,0.4,0.1,,,\n").empty());
  CHECK_FALSE(validate_trace_csv(header + "1,1,2,1.5,0.5,3,0.6,0.4,0.1,,,\n0,1,2,1.5,0.5,3,0.6,0.4,0.1,,,\n").empty());
  CHECK(validate_trace_csv(header + "0,1,2,1.5,0.5,3,0.6,0.4,0.1,,,\n").empty());
}

TEST_CASE("config JSON round trip") {
  RunConfig c;
  c.k = 7;
  c.T0 = 3.5;
  c.loss_kind = MainLoss::LOLS;
  c.prototype_mode = PrototypeMode::Dual;
  c.batch_size = 64;
  c.stop_gradient = false;
  const RunConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.k == 7);
  CHECK(back.loss_kind == MainLoss::LOLS);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"learning_rate", 0.1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"k", "ten"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ConfigError);
}

TEST_CASE("summary statistics and experiment JSON") {
  const Stats s = summarize({1.0, 2.0, 3.0});
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.std == doctest::Approx(1.0));
  CHECK(summarize({4.0}).std == 0.0);
  ExperimentSummary e;
  e.block = "blockX";
  e.seeds = 3;
  e.methods["m"].acc = s;
  e.checks["c"] = 1.5;
  CHECK(e.method("m").acc.mean == doctest::Approx(2.0));
  CHECK(e.check("c") == 1.5);
  CHECK_THROWS(e.method("absent"));
  const nlohmann::json j = to_json(e);
  CHECK(j.at("block") == "blockX");
}

TEST_CASE("SVG line chart") {
  const std::string svg = svg_line_chart("t", "x", "y", {Series{"a", {1, 2, 3}, {1, NAN, 2}}}, true);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(fmt_double(0.5) == "0.5");
  CHECK(join_path("a", "b.csv") == "a/b.csv");
}
