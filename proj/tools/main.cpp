#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relufim/relufim.h"
#include "run_config.hpp"

namespace fs = std::filesystem;
using relufim::cli::ConfigError;
using relufim::cli::RunConfig;

namespace {

enum Exit { kOk = 0, kUsage = 1, kDomain = 2, kCertification = 3 };

struct LibraryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(rf_status s) {
  if (s != RF_OK) throw LibraryError(std::string(rf_status_name(s)) + ": " + rf_last_error());
}

template <auto Free>
struct Deleter {
  template <class T>
  void operator()(T* p) const { Free(p); }
};
using Weights = std::unique_ptr<rf_weights, Deleter<rf_weights_free>>;
using Kernel = std::unique_ptr<rf_kernel, Deleter<rf_kernel_free>>;
using Basis = std::unique_ptr<rf_basis, Deleter<rf_basis_free>>;
using Spectrum = std::unique_ptr<rf_spectrum, Deleter<rf_spectrum_free>>;
using Certificate = std::unique_ptr<rf_certificate, Deleter<rf_certificate_free>>;

// Options shared by every subcommand. Values given on the command line
// override those read from --config.
struct Common {
  std::string config;
  int threads = 0;
  std::optional<std::size_t> d, p, series_N, dense_cap, topk, workers;
  std::optional<std::uint64_t> n, seed;
  std::optional<double> sigma2, eta, delta, C;
  std::optional<std::string> output_dir, source;
  std::string weights, kernel;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "Flat key = value run configuration")->check(CLI::ExistingFile);
    app.add_option("--threads", threads, "Worker threads (0: runtime default)");
    app.add_option("--d", d, "Input dimension");
    app.add_option("--p", p, "Hidden width");
    app.add_option("--n", n, "Empirical sample count");
    app.add_option("--seed", seed, "Weight seed");
    app.add_option("--sigma2", sigma2, "Noise variance of the empirical FIM");
    app.add_option("--eta", eta, "Exponent eta in (0, 1/2) of the deviation budget");
    app.add_option("--delta", delta, "Certification tolerance (default: observed delta*)");
    app.add_option("--C", C, "Constant of the probability floor");
    app.add_option("--series-N", series_N, "Series truncation");
    app.add_option("--dense-cap", dense_cap, "Largest p stored densely");
    app.add_option("--topk", topk, "Compute only the top k eigenvalues (Lanczos)");
    app.add_option("--workers", workers, "Empirical shards");
    app.add_option("--output-dir", output_dir, "Output directory (default $RELUFIM_OUTPUT_DIR or .)");
    app.add_option("--source", source, "Matrix source: closed, series, empirical, approx");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (const char* env = std::getenv("RELUFIM_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    if (!config.empty()) cfg = relufim::cli::load_config(config, cfg);
    auto text = [](const auto& v) {
      std::ostringstream os;
      os << std::setprecision(17) << v;
      return os.str();
    };
    auto over = [&](const char* key, const auto& v) {
      if (v) relufim::cli::set_field(cfg, key, text(*v));
    };
    over("d", d);
    over("p", p);
    over("n", n);
    over("seed", seed);
    over("sigma2", sigma2);
    over("eta", eta);
    over("delta", delta);
    over("C", C);
    over("series_N", series_N);
    over("dense_cap", dense_cap);
    over("topk", topk);
    over("workers", workers);
    over("output_dir", output_dir);
    over("matrix_source", source);
    return cfg;
  }
};

std::size_t need(const std::optional<std::size_t>& v, const char* flag) {
  if (!v) throw ConfigError(std::string("missing ") + flag + " (flag or config key)");
  return *v;
}

fs::path out_dir(const RunConfig& cfg) {
  fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  return dir;
}

rf_source source_of(const std::string& name) {
  rf_source s{};
  check(rf_source_parse(name.c_str(), &s));
  return s;
}

Weights weights_for(const Common& c, const RunConfig& cfg) {
  rf_weights* w = nullptr;
  if (!c.weights.empty()) check(rf_weights_load(c.weights.c_str(), &w));
  else check(rf_weights_generate(need(cfg.d, "--d"), need(cfg.p, "--p"), cfg.seed, &w));
  return Weights(w);
}

Kernel build_kernel(const rf_weights* w, const RunConfig& cfg, rf_source source) {
  rf_build_options o;
  rf_build_options_init(&o);
  o.source = source;
  o.series_terms = cfg.series_N;
  o.samples = cfg.n;
  o.sample_seed = cfg.seed;
  o.sigma2 = cfg.sigma2;
  o.workers = cfg.workers;
  o.dense_cap = cfg.dense_cap;
  rf_kernel* k = nullptr;
  check(rf_kernel_build(w, &o, &k));
  return Kernel(k);
}

std::string run_metadata(const RunConfig& cfg, const rf_weights* w, nlohmann::json extra = nlohmann::json::object()) {
  std::size_t d = 0, p = 0;
  std::uint64_t seed = 0;
  check(rf_weights_info(w, &d, &p, &seed));
  extra["seed"] = seed;
  extra["matrix_source"] = cfg.matrix_source;
  if (cfg.matrix_source == "empirical") {
    extra["n"] = cfg.n;
    extra["sigma2"] = cfg.sigma2;
  }
  if (cfg.matrix_source == "series") extra["series_N"] = cfg.series_N;
  return extra.dump();
}

void print_groups(const rf_spectrum* s) {
  for (int g = 0; g < 4; ++g) {
    std::size_t size = 0;
    double mean = 0.0;
    check(rf_spectrum_group(s, g, &size, &mean));
    std::cout << "group " << g + 1 << ": size " << size << ", mean " << mean;
    double ref = 0.0;
    if (g < 3 && rf_spectrum_reference(s, g, &ref) == RF_OK) std::cout << ", reference " << ref;
    std::cout << '\n';
  }
}

int cmd_generate(const Common& c, bool csv) {
  const RunConfig cfg = c.resolve();
  rf_weights* raw = nullptr;
  check(rf_weights_generate(need(cfg.d, "--d"), need(cfg.p, "--p"), cfg.seed, &raw));
  Weights w(raw);
  const fs::path path = c.weights.empty() ? out_dir(cfg) / "weights.bin" : fs::path(c.weights);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  check(rf_weights_save(w.get(), path.c_str()));
  if (csv) check(rf_weights_write_csv(w.get(), (path.string() + ".csv").c_str()));
  std::cout << "wrote " << path.string() << " (d=" << *cfg.d << ", p=" << *cfg.p << ", seed=" << cfg.seed << ")\n";
  return kOk;
}

int cmd_build(const Common& c, const std::string& out, const std::string& compare) {
  const RunConfig cfg = c.resolve();
  const Weights w = weights_for(c, cfg);
  const Kernel k = build_kernel(w.get(), cfg, source_of(cfg.matrix_source));
  const fs::path path = out.empty() ? out_dir(cfg) / ("J_" + cfg.matrix_source + ".bin") : fs::path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  check(rf_kernel_save(k.get(), path.c_str()));
  std::size_t p = 0;
  double tail = 0.0, trace = 0.0;
  check(rf_kernel_info(k.get(), nullptr, &p, nullptr, nullptr, &tail));
  check(rf_kernel_trace(k.get(), &trace));
  std::cout << "wrote " << path.string() << " (source=" << cfg.matrix_source << ", p=" << p << ", trace=" << trace;
  if (cfg.matrix_source == "series") std::cout << ", tail_bound=" << tail;
  std::cout << ")\n";
  if (!compare.empty()) {
    rf_kernel* other = nullptr;
    check(rf_kernel_load(compare.c_str(), &other));
    const Kernel ref(other);
    double diff = 0.0;
    check(rf_kernel_max_abs_diff(k.get(), ref.get(), &diff));
    std::cout << "max_abs_diff " << std::setprecision(17) << diff << '\n';
  }
  return kOk;
}

int cmd_spectrum(const Common& c, const std::string& prefix) {
  const RunConfig cfg = c.resolve();
  Spectrum s;
  nlohmann::json meta = nlohmann::json::object();
  rf_spectrum* raw = nullptr;
  if (cfg.topk > 0) {
    const Weights w = weights_for(c, cfg);
    check(rf_spectrum_topk(w.get(), source_of(cfg.matrix_source), cfg.topk, cfg.seed, 0.0, &raw));
    s.reset(raw);
    meta = nlohmann::json::parse(run_metadata(cfg, w.get(), {{"topk", cfg.topk}}));
  } else if (!c.kernel.empty()) {
    rf_kernel* k = nullptr;
    check(rf_kernel_load(c.kernel.c_str(), &k));
    Kernel kernel(k);
    Basis basis;
    if (!c.weights.empty()) {
      const Weights w = weights_for(c, cfg);
      rf_basis* b = nullptr;
      check(rf_basis_build(w.get(), &b));
      basis.reset(b);
    }
    check(rf_spectrum_dense(kernel.get(), 1, basis.get(), &raw));
    s.reset(raw);
    meta["kernel"] = fs::path(c.kernel).filename().string();
  } else {
    const Weights w = weights_for(c, cfg);
    Kernel kernel = build_kernel(w.get(), cfg, source_of(cfg.matrix_source));
    rf_basis* b = nullptr;
    check(rf_basis_build(w.get(), &b));
    const Basis basis(b);
    check(rf_spectrum_dense(kernel.get(), 1, basis.get(), &raw));
    s.reset(raw);
    meta = nlohmann::json::parse(run_metadata(cfg, w.get()));
  }
  const fs::path dir = out_dir(cfg);
  const fs::path csv = dir / (prefix + ".csv");
  const fs::path json = dir / (prefix + ".json");
  check(rf_spectrum_write_csv(s.get(), csv.c_str()));
  check(rf_spectrum_write_json(s.get(), json.c_str(), meta.dump().c_str()));
  print_groups(s.get());
  std::cout << "wrote " << csv.string() << " and " << json.string() << '\n';
  return kOk;
}

int cmd_certify(const Common& c, bool literal, const std::string& prefix) {
  const RunConfig cfg = c.resolve();
  const Weights w = weights_for(c, cfg);
  Kernel kernel;
  if (!c.kernel.empty()) {
    rf_kernel* k = nullptr;
    check(rf_kernel_load(c.kernel.c_str(), &k));
    kernel.reset(k);
  } else if (cfg.matrix_source != "closed") {
    kernel = build_kernel(w.get(), cfg, source_of(cfg.matrix_source));
  }
  rf_certify_options o;
  rf_certify_options_init(&o);
  o.use_observed = cfg.delta ? 0 : 1;
  o.delta = cfg.delta.value_or(0.0);
  o.eta = cfg.eta;
  o.c = cfg.C;
  o.literal_xi = literal ? 1 : 0;
  rf_certificate* raw = nullptr;
  check(rf_certify(w.get(), kernel.get(), &o, &raw));
  const Certificate cert(raw);

  const fs::path dir = out_dir(cfg);
  const fs::path json = dir / (prefix + ".json");
  check(rf_certificate_write_json(cert.get(), json.c_str(),
                                  run_metadata(cfg, w.get(), {{"literal_xi", literal}}).c_str()));
  check(rf_certificate_write_csv(cert.get(), (dir / (prefix + ".csv")).c_str()));

  int all_pass = 0;
  std::size_t failures = 0, count = 0;
  double delta = 0.0, delta_star = 0.0;
  check(rf_certificate_summary(cert.get(), &all_pass, &failures, &delta, &delta_star));
  check(rf_certificate_check_count(cert.get(), &count));
  std::cout << std::setprecision(10) << "delta " << delta << " (observed delta* " << delta_star << "), " << count
            << " checks, " << failures << " failed\n";
  std::cout << "wrote " << json.string() << '\n';
  if (all_pass) return kOk;

  constexpr std::size_t kShown = 20;
  std::size_t shown = 0;
  for (std::size_t i = 0; i < count && shown < kShown; ++i) {
    const char* claim = nullptr;
    double lhs = 0.0, rhs = 0.0;
    int pass = 0;
    check(rf_certificate_check(cert.get(), i, &claim, &lhs, &rhs, &pass));
    if (pass) continue;
    std::cerr << "FAIL " << claim << ": " << lhs << " vs " << rhs << '\n';
    ++shown;
  }
  if (failures > shown) std::cerr << "... and " << failures - shown << " more failing checks\n";
  return kCertification;
}

struct Preset {
  std::string source;
  std::size_t d;
  std::size_t p;
  std::uint64_t n;
};

Preset preset_of(const std::string& figure) {
  if (figure == "fig1") return {"empirical", 10, 10000, 100000};
  if (figure == "fig2") return {"closed", 5, 10000, 0};
  if (figure == "fig3") return {"closed", 10, 10000, 0};
  if (figure == "fig4") return {"closed", 20, 10000, 0};
  if (figure == "fig5") return {"closed", 50, 10000, 0};
  throw ConfigError("unknown figure '" + figure + "' (expected fig1 .. fig5)");
}

int cmd_reproduce(const Common& c, const std::string& figure, double scale) {
  const Preset preset = preset_of(figure);
  if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("--scale must lie in (0, 1]");
  RunConfig cfg = c.resolve();
  cfg.d = preset.d;
  cfg.p = static_cast<std::size_t>(std::llround(static_cast<double>(preset.p) * scale));
  cfg.matrix_source = preset.source;
  if (preset.n) cfg.n = static_cast<std::uint64_t>(std::llround(static_cast<double>(preset.n) * scale));

  rf_weights* raw = nullptr;
  check(rf_weights_generate(*cfg.d, *cfg.p, cfg.seed, &raw));
  const Weights w(raw);
  Kernel kernel = build_kernel(w.get(), cfg, source_of(cfg.matrix_source));
  rf_basis* b = nullptr;
  check(rf_basis_build(w.get(), &b));
  const Basis basis(b);
  rf_spectrum* s = nullptr;
  check(rf_spectrum_dense(kernel.get(), 1, basis.get(), &s));
  const Spectrum spectrum(s);

  const fs::path dir = out_dir(cfg);
  const fs::path csv = dir / (figure + "_spectrum.csv");
  const fs::path json = dir / (figure + "_spectrum.json");
  const std::string meta = run_metadata(cfg, w.get(), {{"figure", figure}, {"scale", scale}});
  check(rf_spectrum_write_csv(spectrum.get(), csv.c_str()));
  check(rf_spectrum_write_json(spectrum.get(), json.c_str(), meta.c_str()));
  std::cout << figure << ": d=" << *cfg.d << ", p=" << *cfg.p;
  if (preset.n) std::cout << ", n=" << cfg.n;
  std::cout << ", scale=" << scale << '\n';
  print_groups(spectrum.get());
  std::cout << "wrote " << csv.string() << " and " << json.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectrum and certification tools for the Fisher information of random ReLU layers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rf_version());

  Common common;
  bool csv = false, literal = false;
  std::string out, compare, prefix = "spectrum", cert_prefix = "certificate", figure;
  double scale = 1.0;

  auto* gen = app.add_subcommand("generate", "Draw a weight matrix and write it with its sidecar");
  common.add_to(*gen);
  gen->add_option("--out", common.weights, "Output path (default <output-dir>/weights.bin)");
  gen->add_flag("--csv", csv, "Also write <out>.csv");

  auto* build = app.add_subcommand("build", "Build J (or a variant) and write it with its sidecar");
  common.add_to(*build);
  build->add_option("--weights", common.weights, "Weight file (default: generate from --d --p --seed)");
  build->add_option("--out", out, "Output path (default <output-dir>/J_<source>.bin)");
  build->add_option("--compare", compare, "Report the max entry difference against this kernel file");

  auto* spec = app.add_subcommand("spectrum", "Eigenvalues, group summary and reference levels");
  common.add_to(*spec);
  spec->add_option("--weights", common.weights, "Weight file");
  spec->add_option("--kernel", common.kernel, "Kernel file (default: build from the config)");
  spec->add_option("--prefix", prefix, "Output file stem");

  auto* cert = app.add_subcommand("certify", "Check the deviation bounds and quotient floors of one run");
  common.add_to(*cert);
  cert->add_option("--weights", common.weights, "Weight file");
  cert->add_option("--kernel", common.kernel, "Kernel file (default: matrix-free closed form)");
  cert->add_flag("--literal-xi", literal, "Use xi1_bar(d2) as the fourth term of xi");
  cert->add_option("--prefix", cert_prefix, "Output file stem");

  auto* repro = app.add_subcommand("reproduce", "Run a figure preset and write its spectrum");
  common.add_to(*repro);
  repro->add_option("figure", figure, "fig1 .. fig5")->required();
  repro->add_option("--scale", scale, "Multiply p and n by this factor in (0, 1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    check(rf_set_threads(common.threads));
    if (gen->parsed()) return cmd_generate(common, csv);
    if (build->parsed()) return cmd_build(common, out, compare);
    if (spec->parsed()) return cmd_spectrum(common, prefix);
    if (cert->parsed()) return cmd_certify(common, literal, cert_prefix);
    if (repro->parsed()) return cmd_reproduce(common, figure, scale);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const LibraryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  }
  return kUsage;
}
