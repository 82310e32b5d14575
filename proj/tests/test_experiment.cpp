#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "ttn/analysis.hpp"
#include "ttn/experiment.hpp"
#include "ttn/image.hpp"

using namespace ttn;
using namespace testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ttn_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Image gradient_image(std::size_t h, std::size_t w) {
  Image img;
  img.height = h;
  img.width = w;
  img.samples.resize(h * w * 3);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t c = 0; c < 3; ++c)
        img.samples[(i * w + j) * 3 + c] = static_cast<std::uint8_t>((17 * i + 29 * j + 71 * c) % 256);
  return img;
}

}  // namespace

TEST_SUITE("cli_harness") {

TEST_CASE("config parsing") {
  const auto c = parse_config(nlohmann::json::parse(R"({
    "experiment": "phase", "dims": [10, 10, 10], "r_grid": [2, 3], "p_grid": [0.1, 0.3],
    "trials": 4, "seed": 9, "solver": {"tol": 1e-5, "kappa": [50], "factor_strategy": {"kind": "subsampled", "c": 2}}
  })"));
  CHECK(c.kind == ExperimentKind::phase);
  CHECK(c.r_grid == std::vector<std::size_t>{2, 3});
  CHECK(c.p_grid == std::vector<double>{0.1, 0.3});
  CHECK(c.trials == 4);
  CHECK(c.seed == 9);
  CHECK(c.solver.tol == 1e-5);
  CHECK(c.solver.kappa == std::vector<double>{50});
  REQUIRE(std::holds_alternative<SubsampledRowwise>(c.solver.factor_strategy));
  CHECK(std::get<SubsampledRowwise>(c.solver.factor_strategy).c == 2.0);

  const auto s = parse_config(nlohmann::json::parse(R"({"dims": [8, 8, 8], "rank": 2, "p": 0.5, "topology": "tt"})"));
  CHECK(s.rank == Dims{2, 2, 2});
  CHECK(s.p_grid == std::vector<double>{0.5});
  CHECK(s.topologies == std::vector<std::string>{"tt"});
  CHECK(solver_config_to_json(s.solver)["factor_strategy"]["kind"] == "direct_rowwise");
}

TEST_CASE("config rejects invalid input") {
  auto bad = [](const char* text) { return parse_config(nlohmann::json::parse(text)); };
  CHECK_THROWS_AS(bad(R"({"dims": [8, 8, 8], "typo": 1})"), std::invalid_argument);
  CHECK_THROWS_AS(bad(R"({"dims": [8, 8, 8], "trials": 0})"), std::invalid_argument);
  CHECK_THROWS_AS(bad(R"({"dims": [8, 8, 8], "p_grid": []})"), std::invalid_argument);
  CHECK_THROWS_AS(bad(R"({"dims": [8, 8, 8], "p": 1.5})"), std::invalid_argument);
  CHECK_THROWS_AS(bad(R"({"experiment": "phase", "dims": [8, 8, 8]})"), std::invalid_argument);
  CHECK_THROWS_AS(bad(R"({"experiment": "inpaint", "p": 0.5})"), std::invalid_argument);
  CHECK_THROWS_AS(bad(R"({"dims": [8, 8, 8], "topology": "ht"})"), std::invalid_argument);
  CHECK_THROWS_AS(bad(R"({"dims": [8, 8, 8], "solver": {"kappa": 0.5}})"), std::invalid_argument);
  CHECK_THROWS_AS(bad(R"({"dims": [8, 8, 8], "solver": {"bogus": 1}})"), std::invalid_argument);
  CHECK_THROWS_AS(bad(R"({"dims": [8, 8, 8], "r_grid": [9]})"), std::invalid_argument);
  CHECK_THROWS(load_config("/nonexistent/config.json"));
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"synth_setting1.json", "synth_setting2.json", "phase.json", "inpaint.json"}) {
    CAPTURE(name);
    const auto c = load_config(std::string(TTN_SOURCE_DIR) + "/configs/" + name);
    CHECK(c.check().empty());
    if (c.kind == ExperimentKind::inpaint) CHECK(fs::exists(c.image));
  }
}

TEST_CASE("PPM round trip is bit-identical") {
  const auto img = gradient_image(5, 7);
  std::stringstream ss;
  write_ppm(ss, img);
  const auto back = read_ppm(ss);
  CHECK(back.height == 5);
  CHECK(back.width == 7);
  CHECK(back.samples == img.samples);

  const auto path = scratch("roundtrip.ppm");
  save_ppm(path.string(), img);
  CHECK(load_ppm(path.string()).samples == img.samples);
  std::stringstream again;
  write_ppm(again, load_ppm(path.string()));
  CHECK(again.str() == slurp(path));
  fs::remove(path);
}

TEST_CASE("PPM parsing") {
  std::istringstream white(std::string("P6\n1 1\n255\n") + std::string(3, '\xff'));
  const auto px = read_ppm(white);
  CHECK(px.height == 1);
  CHECK(px.width == 1);
  CHECK(px.samples == std::vector<std::uint8_t>{255, 255, 255});
  std::istringstream comment(std::string("P6\n# note\n2 1\n255\n") + std::string(6, '\x01'));
  CHECK(read_ppm(comment).width == 2);
  std::istringstream p3("P3\n1 1\n255\n255 255 255\n");
  CHECK_THROWS_AS(read_ppm(p3), std::runtime_error);
  std::istringstream deep(std::string("P6\n1 1\n65535\n") + std::string(6, '\0'));
  CHECK_THROWS_AS(read_ppm(deep), std::runtime_error);
  std::istringstream shortdata(std::string("P6\n2 2\n255\n") + std::string(5, '\0'));
  CHECK_THROWS_AS(read_ppm(shortdata), std::runtime_error);
  std::istringstream junk("P6\nx 1\n255\n");
  CHECK_THROWS_AS(read_ppm(junk), std::runtime_error);
  CHECK_THROWS(load_ppm("/nonexistent/image.ppm"));
}

TEST_CASE("reshape plan splits each spatial dimension") {
  const auto p = plan_reshape(135, 198);
  CHECK(p.dims() == Dims{15, 9, 18, 11, 3});
  CHECK(!p.padded());
  CHECK(plan_reshape(60, 90).dims() == Dims{10, 6, 10, 9, 3});
  CHECK(factor_pair(1) == std::pair<std::size_t, std::size_t>{1, 1});
  CHECK(factor_pair(49) == std::pair<std::size_t, std::size_t>{7, 7});
  // 13 is prime: padded to 14 = 7 x 2.
  const auto q = plan_reshape(13, 12);
  CHECK(q.padded());
  CHECK(q.padded_height == 14);
  CHECK(q.dims() == Dims{7, 2, 4, 3, 3});
}

TEST_CASE("reshape is column-major index splitting and inverts exactly") {
  const auto img = gradient_image(12, 10);
  const auto t = image_to_tensor(img);
  const auto plan = plan_reshape(12, 10);
  const auto t5 = reshape_image(t, plan);
  CHECK(t5.dims() == Dims{4, 3, 5, 2, 3});
  // Row i = i1 + 4 i2, column j = j1 + 5 j2.
  CHECK(t5.at(std::vector<std::size_t>{1, 2, 3, 1, 2}) == img.at(1 + 4 * 2, 3 + 5 * 1, 2));
  CHECK(tensor_to_image(unreshape_image(t5, plan)).samples == img.samples);

  const auto odd = gradient_image(13, 11);
  const auto op = plan_reshape(13, 11);
  REQUIRE(op.padded());
  CHECK(tensor_to_image(unreshape_image(reshape_image(image_to_tensor(odd), op), op)).samples == odd.samples);
}

TEST_CASE("tensor_to_image rounds and clamps") {
  DenseTensor t({1, 1, 3}, {-4.0, 127.6, 300.0});
  const auto img = tensor_to_image(t);
  CHECK(img.samples == std::vector<std::uint8_t>{0, 128, 255});
}

TEST_CASE("default inpainting ranks") {
  CHECK(default_inpaint_d0({10, 6, 10, 9, 3}) == Dims{8, 6, 8, 8, 3});
  CHECK(default_inpaint_d0({15, 9, 18, 11, 3}) == Dims{8, 8, 8, 8, 3});
}

TEST_CASE("synthetic run with full observation converges quickly") {
  auto cfg = parse_config(nlohmann::json::parse(R"({"dims": [12, 11, 10], "rank": 3, "p": 1.0, "trials": 1})"));
  const auto runs = run_synthetic_batch(cfg, 1);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].error.empty());
  CHECK(runs[0].trace.records.size() <= 2);
  CHECK(runs[0].success);
  CHECK(runs[0].final_ranks == Dims{3, 3, 3});
}

TEST_CASE("seeds are keyed by cell and trial") {
  CHECK(run_seed(1, 5, 0.3, 0) == run_seed(1, 5, 0.3, 0));
  CHECK(run_seed(1, 5, 0.3, 0) != run_seed(1, 5, 0.3, 1));
  CHECK(run_seed(1, 5, 0.3, 0) != run_seed(1, 3, 0.3, 0));
  CHECK(run_seed(1, 5, 0.3, 0) != run_seed(2, 5, 0.3, 0));
  const auto a = make_synthetic({6, 5, 4}, {2, 2, 2}, 0.5, 3), b = make_synthetic({6, 5, 4}, {2, 2, 2}, 0.5, 3);
  CHECK(a.truth == b.truth);
  CHECK(std::equal(a.observed.linear().begin(), a.observed.linear().end(), b.observed.linear().begin(),
                   b.observed.linear().end()));
  for (const auto& q : a.basis) CHECK(orthonormality_error(q) <= 1e-12);
}

TEST_CASE("phase outputs: labels reproduce the grid and outputs do not depend on threads") {
  auto cfg = parse_config(nlohmann::json::parse(R"({
    "experiment": "phase", "dims": [10, 10, 10], "r_grid": [2, 3], "p_grid": [0.1, 0.3, 0.7],
    "trials": 3, "seed": 4, "solver": {"max_outer": 10}})"));
  const auto d1 = scratch("phase1"), d4 = scratch("phase4");
  const auto r1 = run_synthetic_batch(cfg, 1);
  const auto r4 = run_synthetic_batch(cfg, 4);
  write_synthetic_outputs(d1.string(), cfg, r1, false);
  write_synthetic_outputs(d4.string(), cfg, r4, false);
  const auto phase = slurp(d1 / "phase.csv");
  CHECK(phase == slurp(d4 / "phase.csv"));
  CHECK(slurp(d1 / "summary.csv") == slurp(d4 / "summary.csv"));
  for (const auto& e : fs::directory_iterator(d1 / "traces"))
    CHECK(slurp(e.path()) == slurp(d4 / "traces" / e.path().filename()));

  std::istringstream in(phase);
  std::string line;
  std::getline(in, line);
  CHECK(line == "r,p,success_rate,trials");
  const std::vector<std::string> labels{"2,0.1,", "2,0.3,", "2,0.7,", "3,0.1,", "3,0.3,", "3,0.7,"};
  for (const auto& want : labels) {
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind(want, 0) == 0);
    const auto rate = std::stod(line.substr(want.size(), line.find(',', want.size()) - want.size()));
    CHECK(rate >= 0.0);
    CHECK(rate <= 1.0);
    CHECK(line.substr(line.rfind(',') + 1) == "3");
  }
  CHECK(fs::exists(d1 / "traces" / "trace_r2_p0.1_t0.csv"));
  fs::remove_all(d1);
  fs::remove_all(d4);
}

TEST_CASE("outputs report an unwritable directory") {
  auto cfg = parse_config(nlohmann::json::parse(R"({"dims": [6, 6, 6], "rank": 2, "p": 1.0})"));
  const auto runs = run_synthetic_batch(cfg, 1);
  const auto blocker = scratch("blocker");
  { std::ofstream(blocker) << "x"; }
  CHECK_THROWS(write_synthetic_outputs((blocker / "sub").string(), cfg, runs, false));
  fs::remove(blocker);
}

TEST_CASE("manifest echoes the config and a version") {
  auto cfg = parse_config(nlohmann::json::parse(R"({"dims": [6, 6, 6], "rank": 2, "p": 0.5, "seed": 12})"));
  const auto dir = scratch("manifest");
  write_manifest(dir.string(), cfg);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["config"] == cfg.source);
  CHECK(m["seed"] == 12);
  CHECK(m["version"].get<std::string>() == version_string());
  CHECK(!m["git_describe"].get<std::string>().empty());
  CHECK(m["experiment"] == "synthetic");
  fs::remove_all(dir);
}

TEST_CASE("inpainting with full observation and full ranks reproduces the image") {
  const auto dir = scratch("inpaint_full");
  fs::create_directories(dir);
  const auto img = gradient_image(6, 4);
  save_ppm((dir / "img.ppm").string(), img);
  const auto plan = plan_reshape(6, 4);
  nlohmann::json j = {{"experiment", "inpaint"}, {"image", (dir / "img.ppm").string()}, {"p", 1.0},
                      {"topologies", {"single"}}, {"solver", {{"d0", plan.dims()}, {"kappa", 1e16}}}};
  const auto cfg = parse_config(j);
  const auto batch = run_inpainting_batch(cfg, 1);
  REQUIRE(batch.runs.size() == 1);
  CHECK(batch.runs[0].error.empty());
  CHECK(batch.runs[0].psnr == kPsnrInfinity);
  CHECK(batch.runs[0].recovered.samples == img.samples);
  write_inpaint_outputs((dir / "out").string(), cfg, batch, false);
  CHECK(slurp(dir / "out" / "inpaint.csv").find(",inf,") != std::string::npos);
  CHECK(load_ppm((dir / "out" / "images" / "recovered_single_t0.ppm").string()).samples == img.samples);
  fs::remove_all(dir);
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 7, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  parallel_for(0, 4, [&](std::size_t) { CHECK(false); });
}

}  // TEST_SUITE
