// proxyci: command-line front end.
//
//   proxyci test      --input data.csv            run the test on columns x,y,w
//   proxyci simulate  --spec s.json | --random     write synthetic x,y,w[,u]
//   proxyci sweep     --config sweep.json          type-I/II error table
//   proxyci null-dist --spec s.json                T under H0 vs chi-square
//   proxyci dis-error --spec s.json                discretization-error curve
//
// Exit status: 0 success, 2 statistical-pipeline failure, 3 input/config
// failure. Failures print one line "error: <Name> [stage]: detail" to stderr.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "proxyci/bench.hpp"
#include "proxyci/ci_test.hpp"
#include "proxyci/io.hpp"
#include "proxyci/scm.hpp"

namespace {

using namespace proxyci;

constexpr int kExitPipeline = 2;
constexpr int kExitInput = 3;

struct TestFlags {
  double alpha = 0.05;
  std::size_t bins_x = 14;
  std::size_t bins_w = 12;
  std::size_t bins_y = 5;
  std::string mode = "single-level";

  void attach(CLI::App& app) {
    app.add_option("--alpha", alpha, "significance level")->capture_default_str();
    app.add_option("--bins-x", bins_x, "number of X bins (l_X)")->capture_default_str();
    app.add_option("--bins-w", bins_w, "number of W bins (l_W)")->capture_default_str();
    app.add_option("--bins-y", bins_y, "number of Y bins (l_Y)")->capture_default_str();
    app.add_option("--mode", mode, "single-level | all-levels")->capture_default_str();
  }

  TestConfig config() const {
    TestConfig c;
    c.alpha = alpha;
    c.bins_x = bins_x;
    c.bins_w = bins_w;
    c.bins_y = bins_y;
    c.mode = parse_level_mode(mode, ErrorCode::ConfigError);
    try {
      c.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, e.detail());
    }
    return c;
  }
};

std::ifstream open_input(const std::string& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) throw Error(code, "cannot open '" + path + "'");
  return in;
}

// Writes to the named file, or stdout for "" / "-". Output is buffered so a
// failed run leaves no partial file behind.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::ConfigError, "write to '" + path + "' failed");
}

ScmSpec load_spec(const std::string& path) {
  auto in = open_input(path, ErrorCode::SpecError);
  return spec_from_json(parse_json(in, ErrorCode::SpecError));
}

void require_format(const std::string& format, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (format == a) return;
  throw Error(ErrorCode::ConfigError, "unsupported --format '" + format + "'");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proxy-variable conditional independence test for continuous data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "proxyci 1.0.0");

  // test
  auto* test = app.add_subcommand("test", "run the test on a CSV file with columns x, y, w");
  std::string test_input;
  std::string test_output;
  std::string test_format = "json";
  TestFlags test_flags;
  test->add_option("input,--input", test_input, "CSV file ('-' for stdin)")->required();
  test->add_option("-o,--output", test_output, "output path (default stdout)");
  test->add_option("--format", test_format, "json | csv")->capture_default_str();
  test_flags.attach(*test);

  // simulate
  auto* sim = app.add_subcommand("simulate", "sample a synthetic data set from a structural model");
  std::string sim_spec;
  bool sim_random = false;
  std::string sim_graph = "confounder";
  bool sim_h1 = false;
  bool sim_nonsmooth = false;
  long long sim_n = 1000;
  std::uint64_t sim_seed = 0;
  std::string sim_output;
  bool sim_latent = false;
  std::string sim_spec_out;
  sim->add_option("--spec", sim_spec, "JSON spec file");
  sim->add_flag("--random", sim_random, "draw the spec from the function and noise menus");
  sim->add_option("--graph", sim_graph, "confounder | mediator (with --random)")->capture_default_str();
  sim->add_flag("--h1", sim_h1, "include the X -> Y edge (with --random)");
  sim->add_flag("--nonsmooth", sim_nonsmooth, "add a jump to f_y at the median of U");
  sim->add_option("-n,--n", sim_n, "number of rows")->capture_default_str();
  sim->add_option("--seed", sim_seed, "random seed")->capture_default_str();
  sim->add_option("-o,--output", sim_output, "CSV output path (default stdout)");
  sim->add_flag("--with-latent", sim_latent, "append the latent column u");
  sim->add_option("--write-spec", sim_spec_out, "also write the spec used as JSON");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "type-I / type-II error rates over n and l_W");
  std::string sweep_config;
  std::string sweep_output;
  std::string sweep_format = "csv";
  std::size_t sweep_threads = 0;
  sweep->add_option("--config", sweep_config, "JSON sweep config (default: built-in defaults)");
  sweep->add_option("-o,--output", sweep_output, "output path (default stdout)");
  sweep->add_option("--format", sweep_format, "csv | json")->capture_default_str();
  sweep->add_option("--threads", sweep_threads, "worker threads, overrides the config (0 = all cores)");

  // null-dist
  auto* nulld = app.add_subcommand("null-dist", "distribution of T under H0 versus chi-square");
  std::string null_spec;
  std::size_t null_n = 5000;
  std::size_t null_reps = 1000;
  std::uint64_t null_seed = 0;
  std::size_t null_threads = 0;
  std::string null_output;
  std::string null_format = "json";
  TestFlags null_flags;
  nulld->add_option("--spec", null_spec, "JSON spec file (edge_xy must be false)")->required();
  nulld->add_option("-n,--n", null_n, "sample size")->capture_default_str();
  nulld->add_option("--reps", null_reps, "replications")->capture_default_str();
  nulld->add_option("--seed", null_seed, "random seed")->capture_default_str();
  nulld->add_option("--threads", null_threads, "worker threads (0 = all cores)");
  nulld->add_option("-o,--output", null_output, "output path (default stdout)");
  nulld->add_option("--format", null_format, "json | csv")->capture_default_str();
  null_flags.attach(*nulld);

  // dis-error
  auto* dis = app.add_subcommand("dis-error", "discretization error against bin length (needs oracle U)");
  std::string dis_spec;
  bool dis_nonsmooth = false;
  std::vector<std::size_t> dis_bins{4, 8, 16, 32, 64};
  std::size_t dis_n = 200000;
  std::uint64_t dis_seed = 0;
  std::size_t dis_x_bins = 14;
  std::size_t dis_y_bins = 2;
  std::string dis_output;
  std::string dis_format = "csv";
  dis->add_option("--spec", dis_spec, "JSON spec file")->required();
  dis->add_flag("--nonsmooth", dis_nonsmooth, "use the nonsmooth variant of the spec");
  dis->add_option("--bins", dis_bins, "U bin counts")->delimiter(',')->capture_default_str();
  dis->add_option("-n,--n", dis_n, "sample size")->capture_default_str();
  dis->add_option("--seed", dis_seed, "random seed")->capture_default_str();
  dis->add_option("--x-bins", dis_x_bins, "equal-frequency X bins")->capture_default_str();
  dis->add_option("--y-bins", dis_y_bins, "equal-frequency Y bins")->capture_default_str();
  dis->add_option("-o,--output", dis_output, "output path (default stdout)");
  dis->add_option("--format", dis_format, "csv | json")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: ConfigError: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (*test) {
      const TestConfig cfg = test_flags.config();
      require_format(test_format, {"json", "csv"});
      XywData data;
      if (test_input == "-") {
        data = read_xyw_csv(std::cin);
      } else {
        auto in = open_input(test_input, ErrorCode::ParseError);
        data = read_xyw_csv(in);
      }
      const auto result = proxy_ci_test(data.x, data.y, data.w, cfg);
      if (test_format == "json") {
        emit(test_output, dump(to_json(result, cfg)));
      } else {
        std::ostringstream os;
        os << "statistic,df,p_value,reject,alpha,n\n"
           << format_double(result.statistic) << ',' << result.df << ',' << format_double(result.p_value) << ','
           << (result.reject ? 1 : 0) << ',' << format_double(result.alpha) << ',' << result.n << '\n';
        emit(test_output, os.str());
      }
    } else if (*sim) {
      if (sim_random == !sim_spec.empty())
        throw Error(ErrorCode::SpecError, "give exactly one of --spec or --random");
      if (sim_n < 1) throw Error(ErrorCode::SpecError, "--n must be at least 1");
      ScmSpec spec = sim_random ? random_spec(parse_graph(sim_graph), sim_h1, sim_seed) : load_spec(sim_spec);
      if (sim_nonsmooth) spec = nonsmooth_variant(spec);
      const auto sample = sample_scm(spec, static_cast<std::size_t>(sim_n), sim_seed);
      std::ostringstream os;
      write_sample_csv(os, sample, sim_latent);
      if (!sim_spec_out.empty()) emit(sim_spec_out, dump(to_json(spec)));
      emit(sim_output, os.str());
    } else if (*sweep) {
      require_format(sweep_format, {"csv", "json"});
      SweepConfig cfg;
      if (!sweep_config.empty()) {
        auto in = open_input(sweep_config, ErrorCode::ConfigError);
        cfg = sweep_config_from_json(parse_json(in, ErrorCode::ConfigError));
      }
      if (sweep->count("--threads") > 0) cfg.threads = sweep_threads;
      const auto table = error_rate_sweep(cfg);
      if (sweep_format == "csv") {
        std::ostringstream os;
        write_error_table_csv(os, table);
        emit(sweep_output, os.str());
      } else {
        emit(sweep_output, dump(Json{{"config", to_json(cfg)}, {"cells", to_json(table)}}));
      }
    } else if (*nulld) {
      require_format(null_format, {"json", "csv"});
      const TestConfig cfg = null_flags.config();
      const auto spec = load_spec(null_spec);
      const auto diag = null_distribution_diagnostic(spec, null_n, null_reps, cfg, null_seed, null_threads);
      if (diag.degenerate) std::cerr << "warning: fewer than two statistics; the KS distance is uninformative\n";
      if (null_format == "json") {
        Json j = to_json(diag);
        j["n"] = null_n;
        j["replications"] = null_reps;
        emit(null_output, dump(j));
      } else {
        std::ostringstream os;
        os << "statistic\n";
        for (double t : diag.statistics) os << format_double(t) << '\n';
        emit(null_output, os.str());
      }
    } else if (*dis) {
      require_format(dis_format, {"csv", "json"});
      ScmSpec spec = load_spec(dis_spec);
      if (dis_nonsmooth) spec = nonsmooth_variant(spec);
      const auto curve = discretization_error_curve(spec, dis_bins, dis_n, dis_seed, dis_x_bins, dis_y_bins);
      if (dis_format == "csv") {
        std::ostringstream os;
        write_dis_error_csv(os, curve);
        emit(dis_output, os.str());
      } else {
        emit(dis_output, dump(to_json(curve)));
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_pipeline_error(e.code()) ? kExitPipeline : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
