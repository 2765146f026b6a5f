#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lyap/io.hpp"
#include "lyap/scenario.hpp"

using namespace lyap;
namespace sc = lyap::scenario;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kScenarios = LYAP_SCENARIO_DIR;
const fs::path kData = LYAP_TEST_DATA_DIR;

// Fresh directory per test, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path = fs::temp_directory_path() / ("lyap-" + std::string(info->test_suite_name()) + "-" + info->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return (path / name).string();
  }
};

struct Run {
  int code;
  std::string log;
  std::string out;
};

Run run(const sc::Registry& reg, const std::string& config, sc::Overrides ov = {}) {
  std::ostringstream log, out;
  const int code = sc::run_scenario(reg, config, ov, log, out);
  return {code, log.str(), out.str()};
}

Run run(const std::string& config, sc::Overrides ov = {}) { return run(sc::builtin_registry(), config, ov); }

json strip_wall_times(json report) {
  for (auto& c : report["checks"]) c.erase("wallTime");
  return report;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Registry with one instance whose check or build raises the given error.
template <class Err>
sc::Registry throwing_registry(bool in_build) {
  sc::Registry reg;
  sc::Instance inst;
  inst.info = {"throws", "raises on demand", {}, {"boom", "ok"}, {"ok", "boom"}};
  inst.build = [in_build](const json&, const sc::RunContext&) {
    if (in_build) throw Err("failed to settle");
    sc::BuiltInstance b;
    b.checks["ok"] = [] {
      CheckReport r;
      r.lawName = "ok";
      r.passed = true;
      r.samplesChecked = 1;
      return r;
    };
    b.checks["boom"] = []() -> CheckReport { throw Err("iteration limit"); };
    return b;
  };
  reg.add(inst);
  return reg;
}

}  // namespace

// ---------------------------------------------------------------------------
// io

TEST(ReadMatrixBlocks, ParsesNamedBlocksWithComments) {
  std::istringstream in("# header\nA 2 2\n1 2  # row\n3 4\nB 1 1 inf_is_not_a_number\n");
  EXPECT_THROW(io::read_matrix_blocks(in), ConfigError);
  std::istringstream ok("A 2 2\n1 2\n3 4\nB 1 3 5 6 7\n");
  const auto blocks = io::read_matrix_blocks(ok);
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(blocks.at("A"), (DenseMatrix{{1, 2}, {3, 4}}));
  EXPECT_EQ(blocks.at("B"), (DenseMatrix{{5, 6, 7}}));
}

TEST(ReadMatrixBlocks, Errors) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return io::read_matrix_blocks(in);
  };
  EXPECT_THROW(parse("A 2"), ConfigError);
  EXPECT_THROW(parse("A 2 2\n1 2 3"), ConfigError);
  EXPECT_THROW(parse("A 1 1\n1\nA 1 1\n2"), ConfigError);
  EXPECT_THROW(parse("A 1 1\ninf"), ConfigError);
  EXPECT_THROW(parse("A -1 1\n"), ConfigError);
  EXPECT_THROW(parse("A 1.5 1\n1"), ConfigError);
  EXPECT_TRUE(parse("# nothing\n").empty());
}

TEST(ReadModel, BundledConstantVelocityModel) {
  const auto m = io::read_model_file((kScenarios / "data/constant-velocity.model").string());
  EXPECT_EQ(m.A, (DenseMatrix{{1.0, 0.1}, {0.0, 1.0}}));
  EXPECT_EQ(m.F, (DenseMatrix{{0.1, 0.0}, {0.0, 0.1}}));
  EXPECT_EQ(m.C, (DenseMatrix{{1.0, 0.0}}));
}

TEST(ReadModel, MissingBlockAndMissingFile) {
  std::istringstream in("A 1 1\n1\nF 1 1\n1\n");
  EXPECT_THROW(io::read_model(in), ConfigError);
  EXPECT_THROW(io::read_model_file("/nonexistent/model"), ConfigError);
}

TEST(ReadModelPropertyTest, WriteReadRoundTripIsExact) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = random_model(rng, 1 + static_cast<std::size_t>(trial % 3));
    std::stringstream ss;
    io::write_model(ss, m);
    const auto back = io::read_model(ss);
    EXPECT_EQ(back.A, m.A);
    EXPECT_EQ(back.F, m.F);
    EXPECT_EQ(back.C, m.C);
  }
}

TEST(ReadGraph, NodesInOrderOfAppearance) {
  std::istringstream in("x y 2\n\n# c\ny z inf\nz x 0.5 # trailing\n");
  const auto g = io::read_graph(in);
  EXPECT_EQ(g.nodes, (std::vector<std::string>{"x", "y", "z"}));
  ASSERT_EQ(g.edges.size(), 3u);
  EXPECT_EQ(g.edges[0].src, 0u);
  EXPECT_EQ(g.edges[0].dst, 1u);
  EXPECT_TRUE(g.edges[1].weight.is_infinite());
  EXPECT_EQ(g.edges[2].weight.value(), 0.5);
}

TEST(ReadGraph, Errors) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return io::read_graph(in);
  };
  EXPECT_THROW(parse("a b -1\n"), ConfigError);
  EXPECT_THROW(parse("a b\n"), ConfigError);
  EXPECT_THROW(parse("a b 1 2\n"), ConfigError);
  EXPECT_THROW(parse("a b one\n"), ConfigError);
}

TEST(ReadGraph, BundledPathClosure) {
  const auto g = io::read_graph_file((kScenarios / "data/path5.graph").string());
  const auto s = shortest_path_closure(g.nodes, g.edges);
  ASSERT_EQ(s.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      EXPECT_EQ(s(i, j).value(), static_cast<double>(i > j ? i - j : j - i));
}

TEST(ReadSetSystem, BundledCollapse) {
  const auto sys = io::read_set_system_file((kScenarios / "data/collapse3.sets").string());
  EXPECT_EQ(sys.base, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(sys.pointMap, (std::vector<std::size_t>{0, 0, 0}));
}

TEST(ReadSetSystem, Errors) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return io::read_set_system(in);
  };
  EXPECT_THROW(parse("a -> b\n"), ConfigError);
  EXPECT_THROW(parse("a -> a\na -> a\n"), ConfigError);
  EXPECT_THROW(parse("a => a\n"), ConfigError);
  EXPECT_THROW(parse("a -> a b\n"), ConfigError);
  const auto sys = parse("b -> a\na -> a\n");
  EXPECT_EQ(sys.base, (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(sys.pointMap, (std::vector<std::size_t>{1, 1}));
}

// ---------------------------------------------------------------------------
// Listing

TEST(ListInstances, TextNamesEveryInstance) {
  const auto reg = sc::builtin_registry();
  const auto text = sc::list_instances(reg, false);
  for (const auto& inst : reg.instances()) EXPECT_NE(text.find(inst.info.name + "  "), std::string::npos);
  EXPECT_NE(text.find("step_size (number, default 0.05)"), std::string::npos);
}

TEST(ListInstances, JsonMatchesRegistry) {
  const auto reg = sc::builtin_registry();
  const auto j = json::parse(sc::list_instances(reg, true));
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), reg.instances().size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& info = reg.instances()[i].info;
    EXPECT_EQ(j[i]["name"], info.name);
    EXPECT_EQ(j[i]["parameters"].size(), info.params.size());
    EXPECT_EQ(j[i]["checks"].get<std::vector<std::string>>(), info.checks);
    for (const auto& d : info.defaultChecks)
      EXPECT_NE(std::find(info.checks.begin(), info.checks.end(), d), info.checks.end()) << info.name << " " << d;
  }
}

TEST(ListInstances, EmptyRegistry) {
  const sc::Registry empty;
  EXPECT_EQ(sc::list_instances(empty, false), "");
  EXPECT_EQ(json::parse(sc::list_instances(empty, true)), json::array());
}

TEST(Registry, DuplicateNameIsConfigError) {
  auto reg = sc::builtin_registry();
  EXPECT_THROW(reg.add(*reg.find("rotation")), ConfigError);
}

// ---------------------------------------------------------------------------
// Running

TEST(RunScenario, LinearDecayPassesAllDefaultChecks) {
  const auto r = run((kScenarios / "linear-decay.json").string());
  EXPECT_EQ(r.code, sc::kExitOk) << r.log;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["instance"], "linear-decay");
  EXPECT_EQ(report["seed"], 42);
  EXPECT_EQ(report["complete"], true);
  EXPECT_EQ(report["exitCode"], 0);
  EXPECT_TRUE(report["error"].is_null());
  ASSERT_EQ(report["checks"].size(), 8u);
  for (const auto& c : report["checks"]) {
    EXPECT_TRUE(c["passed"].get<bool>()) << c.dump();
    EXPECT_GE(c["wallTime"].get<double>(), 0.0);
    EXPECT_GT(c["samplesChecked"].get<std::size_t>(), 0u) << c["check"];
  }
  EXPECT_EQ(std::count(r.log.begin(), r.log.end(), '\n'), 8);
}

TEST(RunScenario, LinearGrowthFailsWithCounterexample) {
  const auto r = run((kScenarios / "linear-growth.json").string());
  EXPECT_EQ(r.code, sc::kExitCheckFailed);
  const auto report = json::parse(r.out);
  ASSERT_EQ(report["checks"].size(), 2u);
  EXPECT_TRUE(report["checks"][0]["passed"].get<bool>());
  const auto& stable = report["checks"][1];
  EXPECT_FALSE(stable["passed"].get<bool>());
  ASSERT_TRUE(stable["counterexample"].is_string());
  // Oracle: e^t |x| exceeds |x| + tol at the reported state for some t <= 5.
  const std::string ce = stable["counterexample"];
  const double x = std::stod(ce.substr(ce.find('[') + 1));
  EXPECT_GT(std::exp(5.0) * std::abs(x), std::abs(x) + 1e-6);
  EXPECT_NE(r.log.find("FAIL stable"), std::string::npos);
}

TEST(RunScenario, BundledScenariosExitAsDocumented) {
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".json") continue;
    const auto r = run(entry.path().string());
    const int expected = entry.path().stem() == "linear-growth" ? sc::kExitCheckFailed : sc::kExitOk;
    EXPECT_EQ(r.code, expected) << entry.path() << "\n" << r.log;
  }
}

TEST(RunScenario, DeterministicModuloWallTime) {
  for (const char* name : {"linear-decay.json", "kalman-scalar.json", "powerset.json", "lawvere-path.json"}) {
    const auto a = run((kScenarios / name).string());
    const auto b = run((kScenarios / name).string());
    EXPECT_EQ(strip_wall_times(json::parse(a.out)), strip_wall_times(json::parse(b.out))) << name;
  }
}

TEST(RunScenario, SeedOverrideIsRecordedAndChangesSamples) {
  const auto base = run((kScenarios / "rotation.json").string());
  const auto other = run((kScenarios / "rotation.json").string(), {7, std::nullopt, std::nullopt});
  const auto a = json::parse(base.out), b = json::parse(other.out);
  EXPECT_EQ(b["seed"], 7);
  EXPECT_NE(strip_wall_times(a), strip_wall_times(b));
}

TEST(RunScenario, ToleranceOverrideIsRecorded) {
  const auto r = run((kScenarios / "linear-decay.json").string(), {std::nullopt, 1e-4, std::nullopt});
  EXPECT_EQ(r.code, sc::kExitOk);
  EXPECT_EQ(json::parse(r.out)["tolerance"], 1e-4);
}

TEST(RunScenario, ReportFileAndTrajectoriesResolveAgainstConfigDir) {
  TempDir tmp;
  const auto cfg = tmp.write("decay.json", R"({"schema_version": 1, "instance": "linear-decay", "seed": 3,
    "samples": 50, "checks": ["flow_laws"], "report": "out/report.json", "trajectories": "traj.csv"})");
  fs::create_directories(tmp.path / "out");
  const auto r = run(cfg);
  EXPECT_EQ(r.code, sc::kExitOk) << r.log;
  EXPECT_EQ(r.out, "");
  const auto report = json::parse(read_text(tmp.path / "out/report.json"));
  EXPECT_EQ(report["complete"], true);
  EXPECT_FALSE(fs::exists(tmp.path / "out/report.json.tmp"));

  std::istringstream csv(read_text(tmp.path / "traj.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "sampleIndex,t,state_0,normValue,vValue");
  std::set<std::string> indices;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    indices.insert(line.substr(0, line.find(',')));
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4) << line;
    ++rows;
  }
  EXPECT_EQ(indices, (std::set<std::string>{"0", "1", "2"}));
  EXPECT_GT(rows, 3u);
}

TEST(RunScenario, ReportOverrideWins) {
  TempDir tmp;
  const auto cfg = tmp.write("c.json", R"({"schema_version": 1, "instance": "halving-map", "checks": ["flow_laws"],
    "report": "ignored.json"})");
  const auto target = (tmp.path / "chosen.json").string();
  EXPECT_EQ(run(cfg, {std::nullopt, std::nullopt, target}).code, sc::kExitOk);
  EXPECT_TRUE(fs::exists(target));
  EXPECT_FALSE(fs::exists(tmp.path / "ignored.json"));
}

TEST(RunScenario, ConfigErrorsExitTwo) {
  TempDir tmp;
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"not json", "valid JSON"},
      {"[1, 2]", "JSON object"},
      {R"({"instance": "linear-decay"})", "schema_version"},
      {R"({"schema_version": 2, "instance": "linear-decay"})", "schema_version"},
      {R"({"schema_version": 1})", "missing instance"},
      {R"({"schema_version": 1, "instance": "nope"})", "unknown instance 'nope'"},
      {R"({"schema_version": 1, "instance": "linear-decay", "extra": 1})", "unknown key 'extra'"},
      {R"({"schema_version": 1, "instance": "linear-decay", "seed": -1})", "seed"},
      {R"({"schema_version": 1, "instance": "linear-decay", "checks": ["fly"]})", "no check 'fly'"},
      {R"({"schema_version": 1, "instance": "linear-decay", "checks": "flow_laws"})", "checks must be an array"},
      {R"({"schema_version": 1, "instance": "linear-decay", "parameters": {"bogus": 1}})", "unknown parameter"},
      {R"({"schema_version": 1, "instance": "linear-decay", "parameters": {"horizon": "far"}})", "type number"},
      {R"({"schema_version": 1, "instance": "linear-decay", "parameters": {"step_size": 0}})", "step_size"},
      {R"({"schema_version": 1, "instance": "rotation", "parameters": {"equilibrium": [0]}})", "dimension"},
      {R"({"schema_version": 1, "instance": "kalman", "parameters": {"model_file": "missing.model"}})", "file not found"},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto cfg = tmp.write("case" + std::to_string(i) + ".json", cases[i].first);
    const auto r = run(cfg);
    EXPECT_EQ(r.code, sc::kExitConfig) << cases[i].first;
    EXPECT_NE(r.log.find(cases[i].second), std::string::npos) << cases[i].first << "\n" << r.log;
  }
  EXPECT_EQ(run((tmp.path / "absent.json").string()).code, sc::kExitConfig);
}

TEST(RunScenario, NonConvergenceInCheckExitsThree) {
  TempDir tmp;
  const auto cfg = tmp.write("c.json", R"({"schema_version": 1, "instance": "throws"})");
  const auto r = run(throwing_registry<NonConvergence>(false), cfg);
  EXPECT_EQ(r.code, sc::kExitNumeric);
  const auto report = json::parse(r.out);
  // Default order is ok then boom; the report keeps the completed check.
  ASSERT_EQ(report["checks"].size(), 2u);
  EXPECT_TRUE(report["checks"][0]["passed"].get<bool>());
  EXPECT_EQ(report["checks"][1]["worstResidual"], "inf");
  EXPECT_EQ(report["exitCode"], 3);
  EXPECT_EQ(report["error"], "numeric error: iteration limit");
}

TEST(RunScenario, NonConvergenceInBuildExitsThree) {
  TempDir tmp;
  const auto cfg = tmp.write("c.json", R"({"schema_version": 1, "instance": "throws"})");
  const auto r = run(throwing_registry<NonConvergence>(true), cfg);
  EXPECT_EQ(r.code, sc::kExitNumeric);
  EXPECT_EQ(json::parse(r.out)["checks"].size(), 0u);
}

TEST(RunScenario, ConfigErrorInsideCheckExitsTwo) {
  TempDir tmp;
  const auto cfg = tmp.write("c.json", R"({"schema_version": 1, "instance": "throws", "checks": ["boom", "ok"]})");
  const auto r = run(throwing_registry<ConfigError>(false), cfg);
  EXPECT_EQ(r.code, sc::kExitConfig);
  // Aborts before the second check runs.
  EXPECT_EQ(json::parse(r.out)["checks"].size(), 1u);
}

TEST(RunScenario, PreconditionFailureIsAFailedCheck) {
  TempDir tmp;
  const auto cfg = tmp.write("c.json", R"({"schema_version": 1, "instance": "linear-growth", "seed": 1,
    "samples": 100, "parameters": {"horizon": 5.0}, "checks": ["lyapunov_theorem"]})");
  const auto r = run(cfg);
  EXPECT_EQ(r.code, sc::kExitCheckFailed);
  const auto c = json::parse(r.out)["checks"][0];
  EXPECT_FALSE(c["passed"].get<bool>());
  EXPECT_NE(c["lawName"].get<std::string>().find("[precondition decrescent"), std::string::npos) << c.dump();
}

TEST(RunScenario, ModelFileFromTestData) {
  TempDir tmp;
  const auto cfg = tmp.write("c.json", R"({"schema_version": 1, "instance": "kalman", "samples": 100,
    "parameters": {"model_file": ")" + (kData / "decoupled.model").string() + R"("}})");
  const auto r = run(cfg);
  EXPECT_EQ(r.code, sc::kExitOk) << r.log;
}
