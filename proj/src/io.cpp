#include "relufim/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "relufim/error.hpp"
#include "relufim/rng.hpp"

namespace relufim {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary format assumes a little-endian host");

constexpr std::array<char, 8> kMagic{'R', 'F', 'I', 'M', 'M', 'A', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

enum class FileKind : std::uint32_t { Weights = 0, Kernel = 1 };

struct Header {
  FileKind kind{};
  std::uint64_t d = 0;
  std::uint64_t p = 0;
  std::uint64_t seed = 0;
  double scale = 0.0;
};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream os(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  require(static_cast<bool>(os), ErrorKind::Io, "write to '" + path.string() + "' failed");
}

void write_matrix(const std::filesystem::path& path, const Header& h, const Eigen::MatrixXd& m) {
  auto os = open_out(path, true);
  os.write(kMagic.data(), kMagic.size());
  put(os, kVersion);
  put(os, static_cast<std::uint32_t>(h.kind));
  put(os, h.d);
  put(os, h.p);
  put(os, h.seed);
  put(os, h.scale);
  // Row-major: write the transpose's column-major storage.
  const Eigen::MatrixXd t = m.transpose();
  os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(sizeof(double) * t.size()));
  finish(os, path);
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path, FileKind want, Header& h) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  require(static_cast<bool>(is) && magic == kMagic, ErrorKind::Io, "'" + path.string() + "' is not a relufim matrix file");
  const auto version = get<std::uint32_t>(is);
  require(version == kVersion, ErrorKind::Io, "unsupported matrix file version " + std::to_string(version));
  h.kind = static_cast<FileKind>(get<std::uint32_t>(is));
  h.d = get<std::uint64_t>(is);
  h.p = get<std::uint64_t>(is);
  h.seed = get<std::uint64_t>(is);
  h.scale = get<double>(is);
  require(static_cast<bool>(is), ErrorKind::Io, "truncated header in '" + path.string() + "'");
  require(h.kind == want, ErrorKind::Io,
          "'" + path.string() + "' holds " + (h.kind == FileKind::Weights ? "weights" : "a kernel matrix"));
  const std::uint64_t rows = want == FileKind::Weights ? h.d : h.p;
  const std::uint64_t cols = h.p;
  require(rows > 0 && cols > 0 && rows < (1ull << 31) && cols < (1ull << 31), ErrorKind::Io,
          "implausible matrix shape in '" + path.string() + "'");
  const auto expected = 48 + sizeof(double) * rows * cols;
  require(std::filesystem::file_size(path) == expected, ErrorKind::Io,
          "'" + path.string() + "' has the wrong size for its header");
  Eigen::MatrixXd t(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(rows));
  is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(sizeof(double) * t.size()));
  require(static_cast<bool>(is), ErrorKind::Io, "truncated body in '" + path.string() + "'");
  return t.transpose();
}

json provenance_json(const Provenance& prov) {
  json j{{"source", to_string(prov.source)}};
  switch (prov.source) {
    case Source::Series:
    case Source::Residual:
      j["N"] = prov.terms;
      j["tail_bound"] = prov.tail_bound;
      break;
    case Source::Empirical:
      j["n"] = prov.samples;
      j["sigma2"] = prov.sigma2;
      j["workers"] = prov.workers;
      j["rng"] = GaussianStream::algorithm;
      break;
    default: break;
  }
  return j;
}

void write_sidecar(const std::filesystem::path& path, json j) {
  j["schema_version"] = kSchemaVersion;
  write_text(sidecar_path(path), j.dump(2) + "\n");
}

json read_sidecar(const std::filesystem::path& path) {
  const auto side = sidecar_path(path);
  std::ifstream is(side);
  require(static_cast<bool>(is), ErrorKind::Io, "missing sidecar '" + side.string() + "'");
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, "malformed sidecar '" + side.string() + "': " + e.what());
  }
}

json merge_extra(json base, const std::string& extra) {
  if (extra.empty()) return base;
  json e;
  try {
    e = json::parse(extra);
  } catch (const json::exception& ex) {
    fail(ErrorKind::InvalidArgument, std::string("extra metadata is not valid JSON: ") + ex.what());
  }
  require(e.is_object(), ErrorKind::InvalidArgument, "extra metadata must be a JSON object");
  for (auto& [k, v] : e.items()) base[k] = v;
  return base;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto side = path;
  side += ".json";
  return side;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto os = open_out(path, false);
  os << text;
  finish(os, path);
}

void save_weights(const std::filesystem::path& path, const WeightMatrix& w) {
  write_matrix(path, {FileKind::Weights, w.d(), w.p(), w.seed(), w.scale()}, w.entries());
  write_sidecar(path, {{"kind", "weights"},
                       {"d", w.d()},
                       {"p", w.p()},
                       {"seed", w.seed()},
                       {"scale", w.scale()},
                       {"rng", GaussianStream::algorithm}});
}

WeightMatrix load_weights(const std::filesystem::path& path) {
  Header h;
  Eigen::MatrixXd m = read_matrix(path, FileKind::Weights, h);
  return WeightMatrix(std::move(m), h.seed, h.scale);
}

void save_kernel(const std::filesystem::path& path, const KernelMatrix& j) {
  const RunId& run = j.run();
  write_matrix(path, {FileKind::Kernel, run.d, run.p, run.seed, 0.0}, j.values());
  write_sidecar(path, {{"kind", "kernel"},
                       {"d", run.d},
                       {"p", run.p},
                       {"seed", run.seed},
                       {"provenance", provenance_json(j.provenance())}});
}

KernelMatrix load_kernel(const std::filesystem::path& path) {
  Header h;
  Eigen::MatrixXd m = read_matrix(path, FileKind::Kernel, h);
  const json side = read_sidecar(path);
  Provenance prov;
  try {
    const json& pj = side.at("provenance");
    prov.source = source_from_string(pj.at("source").get<std::string>());
    prov.terms = pj.value("N", std::size_t{0});
    prov.tail_bound = pj.value("tail_bound", 0.0);
    prov.samples = pj.value("n", std::uint64_t{0});
    prov.sigma2 = pj.value("sigma2", 1.0);
    prov.workers = pj.value("workers", std::size_t{1});
    require(side.at("p").get<std::uint64_t>() == h.p && side.at("d").get<std::uint64_t>() == h.d &&
                side.at("seed").get<std::uint64_t>() == h.seed,
            ErrorKind::Io, "sidecar of '" + path.string() + "' disagrees with the binary header");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, "sidecar of '" + path.string() + "' is incomplete: " + e.what());
  }
  return KernelMatrix(std::move(m), prov, {h.d, h.p, h.seed});
}

void write_weights_csv(const std::filesystem::path& path, const WeightMatrix& w) {
  auto os = open_out(path, false);
  os << std::setprecision(17);
  const auto& m = w.entries();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << m(r, c);
    os << '\n';
  }
  finish(os, path);
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumReport& report) {
  auto os = open_out(path, false);
  os << std::setprecision(17) << "rank,eigenvalue,group\n";
  for (Eigen::Index k = 0; k < report.eigenvalues.size(); ++k)
    os << k + 1 << ',' << report.eigenvalues(k) << ','
       << group_of_rank(report.groups, static_cast<std::size_t>(k)) + 1 << '\n';
  finish(os, path);
}

std::string spectrum_json(const SpectrumReport& report, const std::string& extra) {
  json groups = json::array();
  for (std::size_t g = 0; g < report.groups.groups.size(); ++g) {
    const auto& s = report.groups.groups[g];
    groups.push_back({{"group", g + 1},
                      {"first_rank", s.first + 1},
                      {"size", s.size},
                      {"mean", s.mean},
                      {"min", s.min},
                      {"max", s.max},
                      {"predicted", optional_json(s.predicted)}});
  }
  json gaps = json::array();
  for (const auto& r : report.groups.gap_ratios) gaps.push_back(optional_json(r));
  json angles = json::object();
  const std::array<const char*, 3> names{"top", "rows", "quadric"};
  for (std::size_t g = 0; g < 3; ++g)
    if (!report.principal_angles[g].empty()) angles[names[g]] = report.principal_angles[g];
  json j{{"schema_version", kSchemaVersion},
         {"d", report.d},
         {"p", report.p},
         {"source", report.source},
         {"eigenvalue_count", report.eigenvalues.size()},
         {"grouped_count", grouped_count(report.d)},
         {"reference_levels", report.reference},
         {"groups", groups},
         {"gap_ratios", gaps},
         {"principal_angles", angles}};
  return merge_extra(std::move(j), extra).dump(2) + "\n";
}

void write_checks_csv(const std::filesystem::path& path, const CertificateReport& report) {
  auto os = open_out(path, false);
  os << std::setprecision(17) << "claim,lhs,rhs,relation,margin,pass\n";
  for (const auto& c : report.checks)
    os << '"' << c.claim << "\"," << c.lhs << ',' << c.rhs << ',' << (c.upper ? "<=" : ">=") << ','
       << c.margin() << ',' << (c.pass ? "true" : "false") << '\n';
  finish(os, path);
}

void write_quotient_csv(const std::filesystem::path& path, const CertificateReport& report) {
  constexpr std::string_view prefix = "quotient:";
  auto os = open_out(path, false);
  os << std::setprecision(17) << "vector-id,value,bound,pass\n";
  for (const auto& c : report.checks)
    if (c.claim.starts_with(prefix))
      os << '"' << c.claim.substr(prefix.size()) << "\"," << c.lhs << ',' << c.rhs << ','
         << (c.pass ? "true" : "false") << '\n';
  finish(os, path);
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<CertificateReport>& runs) {
  auto os = open_out(path, false);
  os << std::setprecision(17) << "d,p,seed,delta,delta_star,xi,floor,checks,passed\n";
  for (const auto& r : runs)
    os << r.run.d << ',' << r.run.p << ',' << r.run.seed << ',' << r.delta << ',' << r.delta_star << ','
       << r.xi.xi << ',' << r.floor.value << ',' << r.checks.size() << ',' << r.checks.size() - r.failures()
       << '\n';
  finish(os, path);
}

std::string certificate_json(const CertificateReport& r, const std::string& extra) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"claim", c.claim},
                      {"lhs", c.lhs},
                      {"rhs", c.rhs},
                      {"relation", c.upper ? "<=" : ">="},
                      {"margin", c.margin()},
                      {"pass", c.pass}});
  const auto& x = r.xi;
  json j{{"schema_version", kSchemaVersion},
         {"d", r.run.d},
         {"p", r.run.p},
         {"seed", r.run.seed},
         {"delta", r.delta},
         {"delta_star", r.delta_star},
         {"C", r.c},
         {"D", r.D},
         {"probability_floor", r.floor.value},
         {"probability_floor_vacuous", r.floor.vacuous},
         {"trace", r.trace},
         {"xi",
          {{"eta", x.eta},
           {"literal", x.literal},
           {"d1", x.d1},
           {"d2", x.d2},
           {"iota1_d1", x.iota_d1.first},
           {"iota2_d2", x.iota_d2.second},
           {"xi1", x.xi1},
           {"xi2", x.xi2},
           {"xi1_bar", x.xi1_bar},
           {"xi2_bar", x.xi2_bar},
           {"xi1_bar_d2", x.xi1_bar_d2},
           {"xi", x.xi}}},
         {"all_pass", r.all_pass()},
         {"failures", r.failures()},
         {"checks", checks}};
  return merge_extra(std::move(j), extra).dump(2) + "\n";
}

}  // namespace relufim
