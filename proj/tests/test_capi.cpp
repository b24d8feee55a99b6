#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "relufim/relufim.h"

namespace {

struct Weights {
  rf_weights* h = nullptr;
  ~Weights() { rf_weights_free(h); }
};
struct Kernel {
  rf_kernel* h = nullptr;
  ~Kernel() { rf_kernel_free(h); }
};
struct Spectrum {
  rf_spectrum* h = nullptr;
  ~Spectrum() { rf_spectrum_free(h); }
};
struct Certificate {
  rf_certificate* h = nullptr;
  ~Certificate() { rf_certificate_free(h); }
};
struct Basis {
  rf_basis* h = nullptr;
  ~Basis() { rf_basis_free(h); }
};

}  // namespace

TEST_CASE("version, status names and error reporting") {
  CHECK(std::strcmp(rf_version(), "0.1.0") == 0);
  CHECK(std::strcmp(rf_status_name(RF_OK), "ok") == 0);
  Weights w;
  CHECK(rf_weights_generate(3, 0, 1, &w.h) == RF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(rf_last_error()).find("p must be >= 1") != std::string::npos);
  CHECK(w.h == nullptr);
  CHECK(rf_weights_generate(3, 4, 1, nullptr) == RF_ERR_INVALID_ARGUMENT);
  CHECK(rf_weights_info(nullptr, nullptr, nullptr, nullptr) == RF_ERR_INVALID_ARGUMENT);
  CHECK(rf_set_threads(-1) == RF_ERR_DOMAIN);
  CHECK(rf_set_threads(0) == RF_OK);
  CHECK(std::strlen(rf_last_error()) == 0);
  rf_weights_free(nullptr);
}

TEST_CASE("weights through the C interface") {
  Weights w, back;
  REQUIRE(rf_weights_generate(4, 9, 42, &w.h) == RF_OK);
  size_t d = 0, p = 0;
  uint64_t seed = 0;
  REQUIRE(rf_weights_info(w.h, &d, &p, &seed) == RF_OK);
  CHECK(d == 4);
  CHECK(p == 9);
  CHECK(seed == 42);
  const auto path = std::filesystem::temp_directory_path() / "relufim_capi_w.bin";
  REQUIRE(rf_weights_save(w.h, path.c_str()) == RF_OK);
  REQUIRE(rf_weights_load(path.c_str(), &back.h) == RF_OK);
  for (size_t l = 0; l < 4; ++l)
    for (size_t i = 0; i < 9; ++i) {
      double a = 0, b = 0;
      rf_weights_entry(w.h, l, i, &a);
      rf_weights_entry(back.h, l, i, &b);
      CHECK(a == b);
    }
  double x = 0;
  CHECK(rf_weights_entry(w.h, 4, 0, &x) == RF_ERR_INVALID_ARGUMENT);
  CHECK(rf_weights_load("/nonexistent/w.bin", &back.h) == RF_ERR_IO);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".json");
}

TEST_CASE("closed form and series kernels differ by at most the tail bound") {
  Weights w;
  REQUIRE(rf_weights_generate(10, 50, 3, &w.h) == RF_OK);
  rf_build_options o;
  rf_build_options_init(&o);
  Kernel closed, series;
  REQUIRE(rf_kernel_build(w.h, &o, &closed.h) == RF_OK);
  o.source = RF_SOURCE_SERIES;
  o.series_terms = 64;
  REQUIRE(rf_kernel_build(w.h, &o, &series.h) == RF_OK);
  double diff = 0, tail = 0, trace = 0, j01 = 0;
  rf_source src{};
  REQUIRE(rf_kernel_max_abs_diff(closed.h, series.h, &diff) == RF_OK);
  REQUIRE(rf_kernel_info(series.h, nullptr, nullptr, nullptr, &src, &tail) == RF_OK);
  CHECK(src == RF_SOURCE_SERIES);
  CHECK(diff <= tail + 1e-15);
  REQUIRE(rf_kernel_trace(closed.h, &trace) == RF_OK);
  CHECK(trace > 0);
  CHECK(rf_kernel_entry(closed.h, 0, 1, &j01) == RF_OK);
  CHECK(rf_kernel_entry(closed.h, 50, 1, &j01) == RF_ERR_INVALID_ARGUMENT);

  o.source = RF_SOURCE_CLOSED;
  o.dense_cap = 10;
  Kernel refused;
  CHECK(rf_kernel_build(w.h, &o, &refused.h) == RF_ERR_CAPACITY);
}

TEST_CASE("source names") {
  rf_source s{};
  CHECK(rf_source_parse("empirical", &s) == RF_OK);
  CHECK(s == RF_SOURCE_EMPIRICAL);
  CHECK(std::strcmp(rf_source_name(RF_SOURCE_APPROX), "approx") == 0);
  CHECK(rf_source_parse("bogus", &s) != RF_OK);
}

TEST_CASE("dense and top-k spectra") {
  Weights w;
  REQUIRE(rf_weights_generate(5, 200, 9, &w.h) == RF_OK);
  rf_build_options o;
  rf_build_options_init(&o);
  Kernel k;
  REQUIRE(rf_kernel_build(w.h, &o, &k.h) == RF_OK);
  Basis b;
  REQUIRE(rf_basis_build(w.h, &b.h) == RF_OK);
  size_t m = 0;
  REQUIRE(rf_basis_size(b.h, &m) == RF_OK);
  CHECK(m == 21);

  Spectrum dense;
  REQUIRE(rf_spectrum_dense(k.h, 0, b.h, &dense.h) == RF_OK);
  size_t n = 0, size = 0;
  double mean = 0, top = 0, ratio = 0, ref = 0;
  REQUIRE(rf_spectrum_count(dense.h, &n) == RF_OK);
  CHECK(n == 200);
  REQUIRE(rf_spectrum_group(dense.h, 2, &size, &mean) == RF_OK);
  CHECK(size == 14);
  REQUIRE(rf_spectrum_reference(dense.h, 0, &ref) == RF_OK);
  CHECK(ref == doctest::Approx(11 / (4 * M_PI)));
  CHECK(rf_spectrum_reference(dense.h, 3, &ref) == RF_ERR_INVALID_ARGUMENT);
  REQUIRE(rf_spectrum_gap_ratio(dense.h, 1, &ratio) == RF_OK);
  CHECK(ratio > 1);
  REQUIRE(rf_spectrum_value(dense.h, 0, &top) == RF_OK);

  Spectrum iter;
  REQUIRE(rf_spectrum_topk(w.h, RF_SOURCE_CLOSED, 20, 1, 0.0, &iter.h) == RF_OK);
  double t = 0;
  REQUIRE(rf_spectrum_value(iter.h, 0, &t) == RF_OK);
  CHECK(t == doctest::Approx(top).epsilon(1e-9));
  CHECK(rf_spectrum_topk(w.h, RF_SOURCE_SERIES, 5, 1, 0.0, &iter.h) == RF_ERR_INVALID_ARGUMENT);

  // Consuming the kernel leaves the handle empty.
  Spectrum consumed;
  REQUIRE(rf_spectrum_dense(k.h, 1, nullptr, &consumed.h) == RF_OK);
  double tr = 0;
  CHECK(rf_kernel_trace(k.h, &tr) == RF_ERR_INVALID_ARGUMENT);

  const auto dir = std::filesystem::temp_directory_path();
  CHECK(rf_spectrum_write_csv(dense.h, (dir / "relufim_capi_s.csv").c_str()) == RF_OK);
  CHECK(rf_spectrum_write_json(dense.h, (dir / "relufim_capi_s.json").c_str(), "{\"tag\":1}") == RF_OK);
  CHECK(rf_spectrum_write_json(dense.h, (dir / "relufim_capi_s.json").c_str(), "{") == RF_ERR_INVALID_ARGUMENT);
  std::filesystem::remove(dir / "relufim_capi_s.csv");
  std::filesystem::remove(dir / "relufim_capi_s.json");
}

TEST_CASE("certification with and without a dense kernel agrees") {
  Weights w;
  REQUIRE(rf_weights_generate(10, 1000, 5, &w.h) == RF_OK);
  rf_certify_options co;
  rf_certify_options_init(&co);
  Certificate free_cert, dense_cert;
  REQUIRE(rf_certify(w.h, nullptr, &co, &free_cert.h) == RF_OK);

  rf_build_options o;
  rf_build_options_init(&o);
  Kernel k;
  REQUIRE(rf_kernel_build(w.h, &o, &k.h) == RF_OK);
  REQUIRE(rf_certify(w.h, k.h, &co, &dense_cert.h) == RF_OK);

  int pass_a = 0, pass_b = 0;
  double da = 0, db = 0;
  REQUIRE(rf_certificate_summary(free_cert.h, &pass_a, nullptr, nullptr, &da) == RF_OK);
  REQUIRE(rf_certificate_summary(dense_cert.h, &pass_b, nullptr, nullptr, &db) == RF_OK);
  CHECK(pass_a == 1);
  CHECK(pass_b == 1);
  CHECK(da == db);
  size_t count = 0;
  REQUIRE(rf_certificate_check_count(free_cert.h, &count) == RF_OK);
  for (size_t i = 0; i < count; ++i) {
    const char *ca = nullptr, *cb = nullptr;
    double la = 0, lb = 0;
    rf_certificate_check(free_cert.h, i, &ca, &la, nullptr, nullptr);
    rf_certificate_check(dense_cert.h, i, &cb, &lb, nullptr, nullptr);
    CHECK(std::strcmp(ca, cb) == 0);
    CHECK(la == doctest::Approx(lb).epsilon(1e-11));
  }

  co.use_observed = 0;
  co.delta = 1e-9;
  Certificate strict;
  REQUIRE(rf_certify(w.h, nullptr, &co, &strict.h) == RF_OK);
  size_t failures = 0;
  REQUIRE(rf_certificate_summary(strict.h, &pass_a, &failures, nullptr, nullptr) == RF_OK);
  CHECK(pass_a == 0);
  CHECK(failures > 0);

  Weights other;
  REQUIRE(rf_weights_generate(10, 1000, 6, &other.h) == RF_OK);
  Certificate mixed;
  CHECK(rf_certify(other.h, k.h, &co, &mixed.h) == RF_ERR_MISMATCH);
}

TEST_CASE("d = 4 is outside the certified domain") {
  Weights w;
  REQUIRE(rf_weights_generate(4, 100, 1, &w.h) == RF_OK);
  rf_certify_options co;
  rf_certify_options_init(&co);
  Certificate c;
  CHECK(rf_certify(w.h, nullptr, &co, &c.h) == RF_ERR_DOMAIN);
  CHECK(std::string(rf_last_error()).find("d > 4 required") != std::string::npos);
  double xi = 0;
  CHECK(rf_xi(10, 0.25, 0, &xi) == RF_OK);
  CHECK(xi == doctest::Approx(16.18916124879351).epsilon(1e-13));
}
