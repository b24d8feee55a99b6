#include "run_config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace relufim::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty())
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
  return out;
}

template <class T>
std::string format_number(T v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

void set_field(RunConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "d") cfg.d = parse_number<std::size_t>(key, value);
  else if (key == "p") cfg.p = parse_number<std::size_t>(key, value);
  else if (key == "n") cfg.n = parse_number<std::uint64_t>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "sigma2") cfg.sigma2 = parse_number<double>(key, value);
  else if (key == "eta") cfg.eta = parse_number<double>(key, value);
  else if (key == "delta") cfg.delta = parse_number<double>(key, value);
  else if (key == "C") cfg.C = parse_number<double>(key, value);
  else if (key == "series_N") cfg.series_N = parse_number<std::size_t>(key, value);
  else if (key == "dense_cap") cfg.dense_cap = parse_number<std::size_t>(key, value);
  else if (key == "topk") cfg.topk = parse_number<std::size_t>(key, value);
  else if (key == "workers") cfg.workers = parse_number<std::size_t>(key, value);
  else if (key == "output_dir") {
    if (value.empty()) throw ConfigError("output_dir must not be empty");
    cfg.output_dir = std::string(value);
  } else if (key == "matrix_source") {
    if (value != "closed" && value != "series" && value != "empirical" && value != "approx")
      throw ConfigError("matrix_source must be one of closed, series, empirical, approx");
    cfg.matrix_source = std::string(value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

RunConfig parse_config(std::string_view text, RunConfig cfg) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    set_field(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  if (cfg.d) os << "d = " << *cfg.d << '\n';
  if (cfg.p) os << "p = " << *cfg.p << '\n';
  os << "n = " << cfg.n << '\n';
  os << "seed = " << cfg.seed << '\n';
  os << "sigma2 = " << format_number(cfg.sigma2) << '\n';
  os << "eta = " << format_number(cfg.eta) << '\n';
  if (cfg.delta) os << "delta = " << format_number(*cfg.delta) << '\n';
  os << "C = " << format_number(cfg.C) << '\n';
  os << "series_N = " << cfg.series_N << '\n';
  os << "dense_cap = " << cfg.dense_cap << '\n';
  os << "topk = " << cfg.topk << '\n';
  os << "workers = " << cfg.workers << '\n';
  os << "output_dir = " << cfg.output_dir << '\n';
  os << "matrix_source = " << cfg.matrix_source << '\n';
  return os.str();
}

}  // namespace relufim::cli
