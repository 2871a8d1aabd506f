#include "cli.hpp"

#include "bunching/deconv.hpp"
#include "bunching/diagnostics.hpp"
#include "bunching/error.hpp"
#include "bunching/estimator.hpp"
#include "bunching/report.hpp"
#include "bunching/sample.hpp"
#include "bunching/simulate.hpp"
#include "bunching/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace bunching::cli {

namespace {

using nlohmann::json;

ColumnRef column_ref(const std::string& s)
{
  // Bare digits select a column by zero-based position.
  if (!s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
    return static_cast<std::size_t>(std::stoull(s));
  return s;
}

json read_json_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorKind::input, "missing_file", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::input, "malformed_json", path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text, std::ostream& out)
{
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f)
    fail(ErrorKind::input, "unwritable_output", "cannot write " + path);
  f << text;
}

std::string join_command(const std::vector<std::string>& args)
{
  std::string s = "bunching";
  for (const auto& a : args)
    s += " " + a;
  return s;
}

//! Input file and column flags.
struct InputFlags
{
  std::string path;
  std::string x = "x";
  std::string y = "y";
  double bunch = 0.0;
  std::optional<double> tolerance;
  std::string delimiter = ",";
  std::string side = "left_boundary";
  std::vector<std::string> controls; // name or name:discrete

  void add(CLI::App* app)
  {
    app->add_option("-i,--input", path, "Delimited text file with a header row")->required();
    app->add_option("--x", x, "Treatment column (name, or zero-based index)");
    app->add_option("--y", y, "Outcome column (name, or zero-based index)");
    app->add_option("--bunch", bunch, "Bunching point");
    app->add_option("--tolerance", tolerance, "Snap treatment values this close to the bunching point");
    app->add_option("--delimiter", delimiter, "Field delimiter");
    app->add_option("--side", side, "left_boundary, right_boundary, interior_above or interior_below");
    app->add_option("--control", controls, "Control column, optionally suffixed :discrete");
  }

  LoadResult load(const EstimationConfig& config) const
  {
    LoadOptions o;
    o.x = column_ref(x);
    o.y = column_ref(y);
    o.bunch_point = bunch;
    o.match_tolerance = tolerance.value_or(config.bunch_match_tolerance);
    if (delimiter.size() != 1)
      fail(ErrorKind::input, "invalid_argument", "delimiter must be one character");
    o.delimiter = delimiter.front();
    o.side = boundary_side_from_string(side);
    for (const auto& c : controls) {
      const auto colon = c.rfind(':');
      ControlSpec spec;
      spec.column = column_ref(c);
      if (colon != std::string::npos) {
        const auto kind = c.substr(colon + 1);
        if (kind != "discrete" && kind != "continuous")
          fail(ErrorKind::input, "invalid_argument", "control kind must be discrete or continuous");
        spec.column = column_ref(c.substr(0, colon));
        spec.kind = kind == "discrete" ? ControlKind::discrete : ControlKind::continuous;
      }
      o.controls.push_back(spec);
    }
    return load_sample(path, o);
  }
};

//! Estimation settings; a flag given on the command line overrides the config file.
struct ConfigFlags
{
  std::string config_path;
  std::optional<double> h2, h3, h4, h_mean, h_interior;
  std::optional<std::string> kernel1, kernel2, kernel3, kernel4;
  std::optional<double> half_width, floor, max_excluded;
  std::optional<int> nodes;
  std::optional<std::string> noise_model, inversion, theta_rule;
  std::optional<double> theta_tolerance, theta_z, cutoff_constant;
  std::optional<int> theta_replications, bootstrap, threads;
  std::optional<std::uint64_t> seed;
  bool loo_variance = false;

  void add(CLI::App* app)
  {
    app->add_option("--config", config_path, "JSON estimation config");
    app->add_option("--h2", h2, "Boundary density bandwidth");
    app->add_option("--h3", h3, "Boundary characteristic function bandwidth");
    app->add_option("--h4", h4, "Deconvolution regularization bandwidth");
    app->add_option("--h-mean", h_mean, "Bandwidth for the boundary intercept");
    app->add_option("--h-interior", h_interior, "Bandwidth for conditional means above the bunch");
    app->add_option("--kernel1", kernel1);
    app->add_option("--kernel2", kernel2);
    app->add_option("--kernel3", kernel3);
    app->add_option("--kernel4", kernel4);
    app->add_option("--half-width", half_width, "Frequency grid half-width");
    app->add_option("--nodes", nodes, "Frequency grid interval count");
    app->add_option("--floor", floor, "Boundary cf modulus floor");
    app->add_option("--max-excluded", max_excluded, "Largest excluded regularizer share");
    app->add_option("--cutoff-constant", cutoff_constant, "Constant of the data-driven frequency cutoff");
    app->add_option("--noise-model", noise_model, "nonparametric or normal_plugin");
    app->add_option("--inversion", inversion, "one_sided or symmetric");
    app->add_option("--theta-rule", theta_rule, "fixed or bootstrap");
    app->add_option("--theta-tolerance", theta_tolerance);
    app->add_option("--theta-z", theta_z);
    app->add_option("--theta-replications", theta_replications);
    app->add_option("-B,--bootstrap", bootstrap, "Bootstrap replications (0 disables)");
    app->add_option("--seed", seed, "Bootstrap seed");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
    app->add_flag("--loo-variance", loo_variance, "Leave-one-out stage-1 fits for the boundary variance");
  }

  EstimationConfig build() const
  {
    EstimationConfig c;
    if (!config_path.empty())
      c = config_from_json(read_json_file(config_path));
    auto set = [](auto& target, const auto& flag) {
      if (flag)
        target = *flag;
    };
    set(c.h2, h2);
    set(c.h3, h3);
    if (h4)
      c.h4 = *h4;
    if (h_mean)
      c.h_mean = *h_mean;
    if (h_interior)
      c.h_interior = *h_interior;
    if (kernel1)
      c.kernel1 = kernel_from_string(*kernel1);
    if (kernel2)
      c.kernel2 = kernel_from_string(*kernel2);
    if (kernel3)
      c.kernel3 = kernel_from_string(*kernel3);
    if (kernel4)
      c.kernel4 = kernel_from_string(*kernel4);
    if (half_width)
      c.quadrature.half_width = *half_width;
    set(c.quadrature.nodes, nodes);
    set(c.quadrature.floor, floor);
    set(c.quadrature.max_excluded, max_excluded);
    set(c.cutoff_constant, cutoff_constant);
    if (noise_model)
      c.noise_model = noise_model_from_string(*noise_model);
    if (inversion)
      c.inversion = inversion_mode_from_string(*inversion);
    if (theta_rule)
      c.theta_rule = theta_rule_from_string(*theta_rule);
    set(c.theta_tolerance, theta_tolerance);
    set(c.theta_z, theta_z);
    set(c.theta_replications, theta_replications);
    set(c.bootstrap.replications, bootstrap);
    set(c.bootstrap.seed, seed);
    set(c.bootstrap.threads, threads);
    if (loo_variance)
      c.leave_one_out_variance = true;
    return c;
  }
};

void fill_rows(Provenance& p, const InputFlags& input, const LoadResult& loaded)
{
  p.input = input.path;
  p.rows_read = loaded.rows_read;
  p.rows_dropped = loaded.rows_dropped;
  p.rows_snapped = loaded.rows_snapped;
}

DgpSpec load_spec(const std::string& path, bool calibrated)
{
  if (calibrated == !path.empty())
    fail(ErrorKind::input, "invalid_argument", "give exactly one of --spec and --calibrated");
  return calibrated ? calibrated_application_spec() : dgp_from_json(read_json_file(path));
}

std::string att_csv(const std::vector<AttEstimate>& curve)
{
  std::ostringstream s;
  s << "x,degree,att,m_at_x,correction_1,correction_2,se,ci_lo,ci_hi\n";
  for (const auto& a : curve) {
    s << format_double(a.x) << ',' << a.degree << ',' << format_double(a.att) << ','
      << format_double(a.m_at_x) << ',' << format_double(a.correction_terms.at(0)) << ',';
    if (a.correction_terms.size() > 1)
      s << format_double(a.correction_terms[1]);
    s << ',';
    if (a.se)
      s << format_double(*a.se);
    s << ',';
    if (a.ci)
      s << format_double(a.ci->lo) << ',' << format_double(a.ci->hi);
    else
      s << ',';
    s << '\n';
  }
  return s.str();
}

void write_latent_csv(const SimulatedData& data, const std::string& path)
{
  std::ofstream f(path);
  if (!f)
    fail(ErrorKind::input, "unwritable_output", "cannot write " + path);
  const auto& l = data.latent;
  f << "x,y,x_star,selection,noise,y_at_bunch,att\n";
  for (std::size_t i = 0; i < l.x_star.size(); ++i)
    f << format_double(data.sample.treatment()[i]) << ',' << format_double(data.sample.outcome()[i]) << ','
      << format_double(l.x_star[i]) << ',' << format_double(l.selection[i]) << ','
      << format_double(l.noise[i]) << ',' << format_double(l.y_at_bunch[i]) << ','
      << format_double(l.att[i]) << '\n';
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{ "Causal effects from bunching in a continuous treatment", "bunching" };
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1);

  // estimate
  auto* est = app.add_subcommand("estimate", "Average marginal effect at the bunching point");
  InputFlags est_in;
  ConfigFlags est_cfg;
  std::vector<double> h1s;
  std::string est_out, cf_csv;
  est_in.add(est);
  est_cfg.add(est);
  est->add_option("--h1", h1s, "Boundary regression bandwidth; a list runs a sweep")->delimiter(',');
  est->add_option("-o,--output", est_out, "Report path (stdout when absent)");
  est->add_option("--cf-csv", cf_csv, "Also write the characteristic functions used by the inversion");

  // att-curve
  auto* curve = app.add_subcommand("att-curve", "ATT(x) on a treatment grid");
  InputFlags cur_in;
  ConfigFlags cur_cfg;
  std::optional<double> cur_h1;
  std::vector<double> xs;
  std::optional<double> x_max;
  int degree = 1;
  std::string format = "csv", cur_out;
  cur_in.add(curve);
  cur_cfg.add(curve);
  curve->add_option("--h1", cur_h1, "Boundary regression bandwidth");
  auto* xs_opt = curve->add_option("--xs", xs, "Treatment values")->delimiter(',');
  curve->add_option("--max", x_max, "Integer grid from the bunching point up to this value")->excludes(xs_opt);
  curve->add_option("--degree", degree, "Taylor degree of the selection correction")->check(CLI::IsMember({ 1, 2 }));
  curve->add_option("--format", format)->check(CLI::IsMember({ "csv", "json" }));
  curve->add_option("-o,--output", cur_out);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw a sample from a data-generating process");
  std::string sim_spec, sim_out, sim_latent, sim_spec_out;
  bool sim_calibrated = false;
  std::size_t sim_n = 10000;
  std::uint64_t sim_seed = 1;
  sim->add_option("--spec", sim_spec, "JSON DGP spec");
  sim->add_flag("--calibrated", sim_calibrated, "Use the built-in calibrated application spec");
  sim->add_option("-n", sim_n, "Rows")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed);
  sim->add_option("-o,--output", sim_out, "Sample CSV (x, y, controls)")->required();
  sim->add_option("--latent", sim_latent, "Latent CSV with X*, s(X*), noise and ATT");
  sim->add_option("--spec-out", sim_spec_out, "Write the spec used, as JSON");

  // validate
  auto* val = app.add_subcommand("validate", "Monte Carlo bias, RMSE and coverage against the truth");
  std::string val_spec, val_out;
  bool val_calibrated = false;
  int val_reps = 100;
  std::size_t val_n = 10000;
  std::uint64_t val_seed = 1;
  std::optional<double> val_h1;
  ConfigFlags val_cfg;
  val->add_option("--spec", val_spec, "JSON DGP spec");
  val->add_flag("--calibrated", val_calibrated, "Use the built-in calibrated application spec");
  val->add_option("-R,--replications", val_reps)->check(CLI::PositiveNumber);
  val->add_option("-n", val_n)->check(CLI::PositiveNumber);
  val->add_option("--mc-seed", val_seed, "Seed of the simulated samples");
  val->add_option("--h1", val_h1, "Boundary regression bandwidth");
  val->add_option("-o,--output", val_out);
  val_cfg.add(val);

  // diagnostics
  auto* diag = app.add_subcommand("diagnostics", "Conditional means, per-level KDE and QQ tables");
  InputFlags diag_in;
  std::string diag_dir = ".";
  DiagnosticsOptions diag_opts;
  diag_in.add(diag);
  diag->add_option("--out-dir", diag_dir, "Directory for the three CSV files");
  diag->add_option("--bandwidth", diag_opts.kde_bandwidth, "KDE bandwidth in outcome units")->check(CLI::PositiveNumber);
  diag->add_option("--qq-points", diag_opts.qq_points, "Largest number of QQ pairs per level");
  diag->add_option("--min-count", diag_opts.min_level_count, "Skip levels with fewer observations");

  try {
    std::vector<const char*> argv{ "bunching" };
    for (const auto& a : args)
      argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      fail(ErrorKind::input, "invalid_arguments", e.what());
    }
    const auto command = join_command(args);

    if (*est) {
      auto config = est_cfg.build();
      const auto loaded = est_in.load(config);
      if (h1s.empty())
        h1s.push_back(config.h1);
      Report report;
      report.config = config;
      report.provenance = make_provenance(config, command);
      fill_rows(report.provenance, est_in, loaded);
      for (double h : h1s) {
        auto c = config;
        c.h1 = h;
        report.ame.push_back(ame_with_inference(loaded.sample, c));
      }
      if (h1s.size() == 1)
        report.config.h1 = h1s.front();
      if (!cf_csv.empty())
        write_cf_csv(evaluate_cf(loaded.sample, report.config), cf_csv);
      write_text(est_out, emit_report(report), out);
      return 0;
    }

    if (*curve) {
      auto config = cur_cfg.build();
      if (cur_h1)
        config.h1 = *cur_h1;
      const auto loaded = cur_in.load(config);
      const double xb = loaded.sample.bunch_point();
      std::vector<double> grid = xs;
      if (x_max) {
        grid.push_back(xb);
        for (double v = std::floor(xb) + 1.0; v <= *x_max; v += 1.0)
          grid.push_back(v);
      }
      if (grid.empty())
        fail(ErrorKind::input, "invalid_arguments", "att-curve needs --xs or --max");
      std::sort(grid.begin(), grid.end());
      grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
      const auto estimates = att_curve_with_inference(loaded.sample, grid, degree, config);
      if (format == "csv") {
        write_text(cur_out, att_csv(estimates), out);
      } else {
        Report report;
        report.config = config;
        report.provenance = make_provenance(config, command);
        fill_rows(report.provenance, cur_in, loaded);
        report.ame.push_back(ame(loaded.sample, config));
        report.att = estimates;
        write_text(cur_out, emit_report(report), out);
      }
      return 0;
    }

    if (*sim) {
      const auto spec = load_spec(sim_spec, sim_calibrated);
      const auto data = sample_dgp(spec, sim_n, sim_seed);
      write_sample_csv(data.sample, sim_out);
      if (!sim_latent.empty())
        write_latent_csv(data, sim_latent);
      if (!sim_spec_out.empty())
        write_text(sim_spec_out, to_json(spec).dump(2) + "\n", out);
      return 0;
    }

    if (*val) {
      const auto spec = load_spec(val_spec, val_calibrated);
      auto config = val_cfg.build();
      if (val_h1)
        config.h1 = *val_h1;
      const auto summary =
        run_validation(spec, val_reps, val_n, val_seed, config, config.bootstrap.threads);
      auto prov = make_provenance(config, command);
      json doc = {
        { "schema_version", report_schema_version },
        { "software", { { "name", "bunching" }, { "version", prov.version } } },
        { "provenance",
          { { "version", prov.version },
            { "seed", val_seed },
            { "bootstrap_seed", config.bootstrap.seed },
            { "config_hash", prov.config_hash },
            { "command", prov.command },
            { "simd_backend", prov.simd_backend } } },
        { "config", to_json(config) },
        { "spec", to_json(spec) },
        { "summary", to_json(summary) },
      };
      write_text(val_out, doc.dump(2) + "\n", out);
      return 0;
    }

    if (*diag) {
      const auto loaded = diag_in.load(EstimationConfig{});
      const auto bundle = diagnostics(loaded.sample, diag_opts);
      const std::filesystem::path dir(diag_dir);
      std::filesystem::create_directories(dir);
      write_conditional_mean_csv(bundle, dir / "conditional_mean.csv");
      write_kde_csv(bundle, dir / "kde.csv");
      write_qq_csv(bundle, dir / "qq.csv");
      for (const auto& w : bundle.warnings)
        err << "warning: " << w << '\n';
      return 0;
    }
  } catch (const Error& e) {
    err << emit_error(e);
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << emit_error(Error(ErrorKind::input, "filesystem", e.what()));
    return exit_code(ErrorKind::input);
  }
  return 0;
}

} // namespace bunching::cli
