#include "bunching/simulate.hpp"
#include "bunching/version.hpp"
#include "cli.hpp"
#include "support.hpp"

#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <random>
#include <sstream>

using namespace bunching;
using nlohmann::json;

namespace {

struct Run
{
  int code = 0;
  std::string out, err;
};

Run run(const std::vector<std::string>& args)
{
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

DgpSpec linear_selection_dgp()
{
  DgpSpec spec;
  spec.xstar = XStarLaw::normal(-1.0, 1.0);
  spec.selection = SelectionSpec::both(OffsetFunction::polynomial({ 2.0 }));
  spec.att = OffsetFunction::polynomial({ -1.0 });
  return spec;
}

DgpSpec quadratic_selection_dgp()
{
  DgpSpec spec = linear_selection_dgp();
  spec.selection.below = OffsetFunction::exponential(-2.0, -1.0);
  spec.selection.above = OffsetFunction::polynomial({ 2.0, -1.0 });
  return spec;
}

// Shared fixture: a spec file and a simulated sample on disk.
struct Fixture
{
  testing::TempDir dir;
  std::string spec, data;
  Fixture()
  {
    spec = (dir / "spec.json").string();
    data = (dir / "data.csv").string();
    testing::write_file(spec, to_json(linear_selection_dgp()).dump(2));
    const auto r = run({ "simulate", "--spec", spec, "-n", "50000", "--seed", "3", "-o", data,
                         "--latent", (dir / "latent.csv").string() });
    REQUIRE(r.code == 0);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

const std::vector<std::string> fast{ "--h2", "0.6", "--h3", "0.6", "--nodes", "256" };

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b)
{
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<std::vector<std::string>> read_csv(const std::string& text)
{
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::string field;
    std::istringstream fs(line);
    while (std::getline(fs, field, ','))
      row.push_back(field);
    if (!line.empty() && line.back() == ',')
      row.push_back("");
    rows.push_back(row);
  }
  return rows;
}

} // namespace

TEST_CASE("simulate writes sample, latent and spec files")
{
  Fixture f;
  const auto sample = testing::read_file(f.data);
  CHECK(sample.rfind("x,y\n", 0) == 0);
  CHECK(std::count(sample.begin(), sample.end(), '\n') == 50001);
  const auto latent = testing::read_file(f.path("latent.csv"));
  CHECK(latent.rfind("x,y,x_star,selection,noise,y_at_bunch,att\n", 0) == 0);
  const auto r = run({ "simulate", "--calibrated", "-n", "10", "-o", f.path("c.csv"), "--spec-out",
                       f.path("c.json") });
  CHECK(r.code == 0);
  const auto spec = json::parse(testing::read_file(f.path("c.json")));
  CHECK(spec.at("metadata").at("targets").at("bunched_share") == 0.81);
  CHECK(run({ "simulate", "-n", "10", "-o", f.path("x.csv") }).code == 2);
}

TEST_CASE("estimate without bootstrap has no standard error")
{
  Fixture f;
  const auto r = run(cat({ "estimate", "-i", f.data, "--h1", "0.6", "-B", "0" }, fast));
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc.at("schema_version") == report_schema_version);
  REQUIRE(doc.at("ame").size() == 1);
  const auto& a = doc.at("ame")[0];
  CHECK_FALSE(a.contains("se"));
  CHECK_FALSE(a.contains("ci"));
  CHECK(a.at("theta") == 1);
  CHECK(std::abs(a.at("ame").get<double>() + 1.0) < 0.8);
  CHECK(doc.at("provenance").at("rows_read") == 50000);
  CHECK(doc.at("provenance").at("version") == std::string(version));
  CHECK_FALSE(doc.contains("error"));
}

TEST_CASE("estimate with bootstrap, sweep, output file and cf dump")
{
  Fixture f;
  const auto out = f.path("report.json");
  const auto r = run(cat({ "estimate", "-i", f.data, "--h1", "0.5,0.7", "-B", "4", "--seed", "9",
                           "-o", out, "--cf-csv", f.path("cf.csv") },
                         fast));
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  const auto doc = json::parse(testing::read_file(out));
  REQUIRE(doc.at("ame").size() == 2);
  CHECK(doc.at("ame")[0].at("bandwidths").at("h1") == 0.5);
  CHECK(doc.at("ame")[1].at("bandwidths").at("h1") == 0.7);
  CHECK(doc.at("ame")[0].contains("se"));
  CHECK(doc.at("ame")[0].at("bootstrap").at("replications") == 4);
  CHECK(testing::read_file(f.path("cf.csv")).rfind("xi,num_re,num_im,den_re,den_im\n", 0) == 0);

  // Same inputs and seed give the same bytes.
  const auto again = run(cat({ "estimate", "-i", f.data, "--h1", "0.5,0.7", "-B", "4", "--seed",
                               "9", "-o", out, "--cf-csv", f.path("cf.csv") },
                             fast));
  CHECK(again.code == 0);
  CHECK(testing::read_file(out) == doc.dump(2) + "\n");
}

TEST_CASE("input without bunched rows exits with an input error and no report")
{
  testing::TempDir dir;
  testing::write_file(dir / "none.csv", "x,y\n1,2\n2,3\n3,4\n");
  const auto out = (dir / "r.json").string();
  const auto r = run({ "estimate", "-i", (dir / "none.csv").string(), "-o", out });
  CHECK(r.code == 2);
  CHECK_FALSE(std::filesystem::exists(out));
  CHECK(r.out.empty());
  const auto e = json::parse(r.err);
  CHECK(e.at("error").at("code") == "no_bunched_rows");
  CHECK(e.at("error").at("kind") == "input");
  CHECK_FALSE(e.contains("ame"));
}

TEST_CASE("error kinds map to exit codes")
{
  testing::TempDir dir;
  CHECK(run({}).code == 2);
  CHECK(run({ "estimate" }).code == 2);
  CHECK(json::parse(run({ "estimate" }).err).at("error").at("code") == "invalid_arguments");
  CHECK(run({ "estimate", "-i", (dir / "missing.csv").string() }).code == 2);
  testing::write_file(dir / "c.json", R"({"h9": 1})");
  testing::write_file(dir / "d.csv", "x,y\n0,1\n1,2\n2,3\n");
  const auto bad = run({ "estimate", "-i", (dir / "d.csv").string(), "--config",
                         (dir / "c.json").string() });
  CHECK(bad.code == 2);

  // Identical outcome laws on both sides with the literal sign rule: the
  // deconvolution finds no selection although the sign is nonzero.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::ostringstream csv;
  csv << "x,y\n";
  for (int i = 0; i < 40000; ++i) {
    const double x = std::max(-1.0 + g(rng), 0.0);
    csv << x << ',' << 2.0 + 3.0 * x + g(rng) << '\n';
  }
  testing::write_file(dir / "exo.csv", csv.str());
  const auto degenerate = run(cat({ "estimate", "-i", (dir / "exo.csv").string(), "--h1", "0.6" }, fast));
  CHECK(degenerate.code == 3);
  CHECK(json::parse(degenerate.err).at("error").at("code") == "inconsistent_deconvolution");
  const auto tolerant = run(cat({ "estimate", "-i", (dir / "exo.csv").string(), "--h1", "0.6",
                                  "--theta-rule", "bootstrap", "--theta-replications", "50" },
                                fast));
  CHECK(tolerant.code == 0);
  CHECK(json::parse(tolerant.out).at("ame")[0].at("theta") == 0);

  const auto v = run({ "--version" });
  CHECK(v.code == 0);
  CHECK(v.out.find(version) != std::string::npos);
}

TEST_CASE("flags override the config file")
{
  Fixture f;
  testing::write_file(f.dir / "cfg.json", R"({"h2": 0.9, "h3": 0.8, "quadrature": {"nodes": 128}})");
  const auto cfg = f.path("cfg.json");
  const auto from_file = run({ "estimate", "-i", f.data, "--h1", "0.6", "--config", cfg });
  REQUIRE(from_file.code == 0);
  const auto a = json::parse(from_file.out);
  CHECK(a.at("config").at("h2") == 0.9);
  CHECK(a.at("config").at("h3") == 0.8);
  CHECK(a.at("config").at("quadrature").at("nodes") == 128);
  const auto flagged = run({ "estimate", "-i", f.data, "--h1", "0.6", "--config", cfg, "--h2", "0.7" });
  REQUIRE(flagged.code == 0);
  const auto b = json::parse(flagged.out);
  CHECK(b.at("config").at("h2") == 0.7);
  CHECK(b.at("config").at("h3") == 0.8);
  CHECK(a.at("provenance").at("config_hash") != b.at("provenance").at("config_hash"));
}

TEST_CASE("att-curve grid, ordering and the single-point invariant")
{
  Fixture f;
  const auto r = run(cat({ "att-curve", "-i", f.data, "--h1", "0.6", "--max", "3" }, fast));
  REQUIRE(r.code == 0);
  const auto rows = read_csv(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0][0] == "x");
  CHECK(rows[1][0] == "0");
  CHECK(rows[1][2] == "0");
  for (std::size_t i = 2; i < rows.size(); ++i)
    CHECK(std::stod(rows[i][0]) > std::stod(rows[i - 1][0]));
  CHECK(std::abs(std::stod(rows[2][2]) - (-1.0)) < 0.5);

  const auto single = run(cat({ "att-curve", "-i", f.data, "--h1", "0.6", "--xs", "2" }, fast));
  REQUIRE(single.code == 0);
  const auto one = read_csv(single.out);
  REQUIRE(one.size() == 2);
  CHECK(one[1] == rows[3]);

  const auto unsorted = run(cat({ "att-curve", "-i", f.data, "--h1", "0.6", "--xs", "2,0.5,1",
                                  "--degree", "2", "--format", "json" },
                                fast));
  REQUIRE(unsorted.code == 0);
  const auto doc = json::parse(unsorted.out);
  REQUIRE(doc.at("att").size() == 3);
  CHECK(doc.at("att")[0].at("x") == 0.5);
  CHECK(doc.at("att")[2].at("x") == 2.0);
  CHECK(doc.at("att")[0].at("degree") == 2);
  CHECK(doc.at("ame").size() == 1);
}

TEST_CASE("att-curve: second degree beats first degree under curved selection")
{
  testing::TempDir dir;
  const auto spec = (dir / "q.json").string();
  const auto data = (dir / "q.csv").string();
  testing::write_file(spec, to_json(quadratic_selection_dgp()).dump());
  REQUIRE(run({ "simulate", "--spec", spec, "-n", "1000000", "--seed", "13", "-o", data }).code == 0);
  double worst[2] = { 0.0, 0.0 };
  for (int degree : { 1, 2 }) {
    const auto r = run({ "att-curve", "-i", data, "--h1", "0.4", "--h2", "0.4", "--h3", "0.4",
                         "--xs", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1", "--degree",
                         std::to_string(degree) });
    REQUIRE(r.code == 0);
    const auto rows = read_csv(r.out);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double x = std::stod(rows[i][0]);
      worst[degree - 1] = std::max(worst[degree - 1], std::abs(std::stod(rows[i][2]) - (-x)));
    }
  }
  CHECK(worst[1] < worst[0]);
}

TEST_CASE("validate is deterministic")
{
  Fixture f;
  const auto out = f.path("v.json");
  const std::vector<std::string> args = cat({ "validate", "--spec", f.spec, "-R", "1", "-n", "20000",
                                              "--mc-seed", "4", "--h1", "0.6", "-o", out },
                                            fast);
  REQUIRE(run(args).code == 0);
  const auto first = testing::read_file(out);
  REQUIRE(run(args).code == 0);
  CHECK(testing::read_file(out) == first);
  const auto doc = json::parse(first);
  CHECK(doc.at("summary").at("replications") == 1);
  CHECK(doc.at("summary").at("truth") == -1.0);
  CHECK(doc.contains("spec"));
}

TEST_CASE("diagnostics writes three tables")
{
  Fixture f;
  const auto out = f.path("diag");
  const auto r = run({ "diagnostics", "-i", f.data, "--out-dir", out, "--bandwidth", "0.5" });
  REQUIRE(r.code == 0);
  CHECK(testing::read_file(f.dir / "diag" / "conditional_mean.csv").rfind("x,mean_y,ci_lo,ci_hi,count\n", 0) == 0);
  CHECK(testing::read_file(f.dir / "diag" / "kde.csv").rfind("level,grid_y,density\n", 0) == 0);
  CHECK(testing::read_file(f.dir / "diag" / "qq.csv").rfind("level,normal_quantile,sample_quantile\n", 0) == 0);
  // Treatment levels beyond 3 are sparse in this design and are reported.
  CHECK(r.err.find("warning") != std::string::npos);
}
