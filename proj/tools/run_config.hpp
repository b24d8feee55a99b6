#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relufim::cli {

/// A malformed config file or flag value (usage error).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::optional<std::size_t> d;
  std::optional<std::size_t> p;
  std::uint64_t n = 100000;
  std::uint64_t seed = 0;
  double sigma2 = 1.0;
  double eta = 0.25;
  std::optional<double> delta;  // unset: certify at the observed delta*
  double C = 1.0;
  std::size_t series_N = 64;
  std::size_t dense_cap = 20000;
  std::size_t topk = 0;
  std::size_t workers = 1;
  std::string output_dir = ".";
  std::string matrix_source = "closed";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Sets one field from its textual value; throws ConfigError on an unknown
/// key or an unparsable value.
void set_field(RunConfig& cfg, std::string_view key, std::string_view value);

/// Flat "key = value" lines; '#' starts a comment.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Inverse of parse_config: unset optional fields are omitted and doubles are
/// written in shortest round-trip form.
std::string serialize_config(const RunConfig& cfg);

}  // namespace relufim::cli
