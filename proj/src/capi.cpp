#include "relufim/relufim.h"

#include <optional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "relufim/bounds.hpp"
#include "relufim/decomposition.hpp"
#include "relufim/empirical.hpp"
#include "relufim/error.hpp"
#include "relufim/io.hpp"
#include "relufim/kernel.hpp"
#include "relufim/operator.hpp"
#include "relufim/spectrum.hpp"

struct rf_weights {
  relufim::WeightMatrix w;
};

struct rf_kernel {
  std::optional<relufim::KernelMatrix> k;  // empty once consumed
};

struct rf_basis {
  relufim::FeatureBasis b;
};

struct rf_spectrum {
  relufim::SpectrumReport report;
};

struct rf_certificate {
  relufim::CertificateReport report;
};

namespace {

using namespace relufim;

thread_local std::string last_error;

rf_status to_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return RF_ERR_INVALID_ARGUMENT;
    case ErrorKind::Domain: return RF_ERR_DOMAIN;
    case ErrorKind::Capacity: return RF_ERR_CAPACITY;
    case ErrorKind::NotConverged: return RF_ERR_NOT_CONVERGED;
    case ErrorKind::Mismatch: return RF_ERR_MISMATCH;
    case ErrorKind::Io: return RF_ERR_IO;
  }
  return RF_ERR_INTERNAL;
}

template <class F>
rf_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return RF_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return RF_ERR_CAPACITY;
  } catch (const std::exception& e) {
    last_error = e.what();
    return RF_ERR_INTERNAL;
  }
}

template <class T>
T& deref(T* p, const char* what) {
  require(p != nullptr, ErrorKind::InvalidArgument, std::string(what) + " must not be null");
  return *p;
}

const KernelMatrix& kernel_of(const rf_kernel* k) {
  const auto& h = deref(k, "kernel");
  require(h.k.has_value(), ErrorKind::InvalidArgument, "kernel storage was consumed by an eigensolve");
  return *h.k;
}

Source to_source(rf_source s) {
  switch (s) {
    case RF_SOURCE_CLOSED: return Source::ClosedForm;
    case RF_SOURCE_SERIES: return Source::Series;
    case RF_SOURCE_EMPIRICAL: return Source::Empirical;
    case RF_SOURCE_APPROX: return Source::Approx;
    case RF_SOURCE_RESIDUAL: return Source::Residual;
  }
  fail(ErrorKind::InvalidArgument, "unknown matrix source");
}

rf_source from_source(Source s) {
  switch (s) {
    case Source::ClosedForm: return RF_SOURCE_CLOSED;
    case Source::Series: return RF_SOURCE_SERIES;
    case Source::Empirical: return RF_SOURCE_EMPIRICAL;
    case Source::Approx: return RF_SOURCE_APPROX;
    case Source::Residual: return RF_SOURCE_RESIDUAL;
  }
  return RF_SOURCE_CLOSED;
}

std::string extra_of(const char* extra) { return extra ? std::string(extra) : std::string(); }

const GroupStats& group_at(const rf_spectrum* s, int group) {
  require(group >= 0 && group < 4, ErrorKind::InvalidArgument, "group must be in 0..3");
  return deref(s, "spectrum").report.groups.groups[static_cast<std::size_t>(group)];
}

}  // namespace

extern "C" {

const char* rf_version(void) { return "0.1.0"; }

const char* rf_last_error(void) { return last_error.c_str(); }

const char* rf_status_name(rf_status status) {
  switch (status) {
    case RF_OK: return "ok";
    case RF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RF_ERR_DOMAIN: return "domain error";
    case RF_ERR_CAPACITY: return "capacity exceeded";
    case RF_ERR_NOT_CONVERGED: return "not converged";
    case RF_ERR_MISMATCH: return "run mismatch";
    case RF_ERR_IO: return "i/o error";
    case RF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

rf_status rf_set_threads(int n) {
  return guarded([&] {
    require(n >= 0, ErrorKind::Domain, "thread count must be >= 0");
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
  });
}

rf_status rf_weights_generate(size_t d, size_t p, uint64_t seed, rf_weights** out) {
  return guarded([&] {
    deref(out, "out") = new rf_weights{generate_weights(d, p, seed)};
  });
}

rf_status rf_weights_load(const char* path, rf_weights** out) {
  return guarded([&] { deref(out, "out") = new rf_weights{load_weights(&deref(path, "path"))}; });
}

rf_status rf_weights_save(const rf_weights* w, const char* path) {
  return guarded([&] { save_weights(&deref(path, "path"), deref(w, "weights").w); });
}

rf_status rf_weights_write_csv(const rf_weights* w, const char* path) {
  return guarded([&] { write_weights_csv(&deref(path, "path"), deref(w, "weights").w); });
}

rf_status rf_weights_info(const rf_weights* w, size_t* d, size_t* p, uint64_t* seed) {
  return guarded([&] {
    const auto run = deref(w, "weights").w.run();
    if (d) *d = run.d;
    if (p) *p = run.p;
    if (seed) *seed = run.seed;
  });
}

rf_status rf_weights_entry(const rf_weights* w, size_t row, size_t col, double* out) {
  return guarded([&] {
    const auto& m = deref(w, "weights").w;
    require(row < m.d() && col < m.p(), ErrorKind::InvalidArgument, "weight index out of range");
    deref(out, "out") = m.entries()(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  });
}

void rf_weights_free(rf_weights* w) { delete w; }

void rf_build_options_init(rf_build_options* o) {
  if (!o) return;
  *o = rf_build_options{RF_SOURCE_CLOSED, 64, 100000, 0, 1.0, 1, kDefaultDenseCap};
}

rf_status rf_source_parse(const char* name, rf_source* out) {
  return guarded([&] { deref(out, "out") = from_source(source_from_string(&deref(name, "name"))); });
}

const char* rf_source_name(rf_source source) {
  switch (source) {
    case RF_SOURCE_CLOSED: return "closed";
    case RF_SOURCE_SERIES: return "series";
    case RF_SOURCE_EMPIRICAL: return "empirical";
    case RF_SOURCE_APPROX: return "approx";
    case RF_SOURCE_RESIDUAL: return "residual";
  }
  return "unknown";
}

rf_status rf_kernel_build(const rf_weights* w, const rf_build_options* options, rf_kernel** out) {
  return guarded([&] {
    const auto& weights = deref(w, "weights").w;
    const auto& o = deref(options, "options");
    auto& result = deref(out, "out");
    const SeriesSpec spec{o.series_terms, 0.0, std::max<std::size_t>(o.series_terms + 1, 4096)};
    switch (to_source(o.source)) {
      case Source::ClosedForm:
        result = new rf_kernel{closed_form_J(column_geometry(weights), o.dense_cap)};
        break;
      case Source::Series:
        result = new rf_kernel{series_J(column_geometry(weights), spec, o.dense_cap)};
        break;
      case Source::Residual:
        result = new rf_kernel{residual_R(column_geometry(weights), spec, o.dense_cap)};
        break;
      case Source::Approx:
        result = new rf_kernel{assemble_approx(FeatureBasis(weights), o.dense_cap)};
        break;
      case Source::Empirical: {
        EmpiricalOptions eo;
        eo.samples = o.samples;
        eo.seed = o.sample_seed;
        eo.workers = o.workers;
        eo.dense_cap = o.dense_cap;
        result = new rf_kernel{empirical_J(weights, eo, o.sigma2)};
        break;
      }
    }
  });
}

rf_status rf_kernel_load(const char* path, rf_kernel** out) {
  return guarded([&] { deref(out, "out") = new rf_kernel{load_kernel(&deref(path, "path"))}; });
}

rf_status rf_kernel_save(const rf_kernel* k, const char* path) {
  return guarded([&] { save_kernel(&deref(path, "path"), kernel_of(k)); });
}

rf_status rf_kernel_info(const rf_kernel* k, size_t* d, size_t* p, uint64_t* seed, rf_source* source,
                         double* tail_bound) {
  return guarded([&] {
    const auto& m = kernel_of(k);
    if (d) *d = m.run().d;
    if (p) *p = m.run().p;
    if (seed) *seed = m.run().seed;
    if (source) *source = from_source(m.provenance().source);
    if (tail_bound) *tail_bound = m.provenance().tail_bound;
  });
}

rf_status rf_kernel_entry(const rf_kernel* k, size_t i, size_t j, double* out) {
  return guarded([&] {
    const auto& m = kernel_of(k);
    require(i < m.p() && j < m.p(), ErrorKind::InvalidArgument, "kernel index out of range");
    deref(out, "out") = m(i, j);
  });
}

rf_status rf_kernel_trace(const rf_kernel* k, double* out) {
  return guarded([&] { deref(out, "out") = kernel_of(k).trace(); });
}

rf_status rf_kernel_max_abs_diff(const rf_kernel* a, const rf_kernel* b, double* out) {
  return guarded([&] {
    const auto& x = kernel_of(a);
    const auto& y = kernel_of(b);
    require(x.p() == y.p(), ErrorKind::Mismatch, "kernels have different widths");
    deref(out, "out") = (x.values() - y.values()).cwiseAbs().maxCoeff();
  });
}

void rf_kernel_free(rf_kernel* k) { delete k; }

rf_status rf_basis_build(const rf_weights* w, rf_basis** out) {
  return guarded([&] { deref(out, "out") = new rf_basis{FeatureBasis(deref(w, "weights").w)}; });
}

rf_status rf_basis_size(const rf_basis* b, size_t* out) {
  return guarded([&] { deref(out, "out") = deref(b, "basis").b.size(); });
}

void rf_basis_free(rf_basis* b) { delete b; }

rf_status rf_spectrum_dense(rf_kernel* k, int consume, const rf_basis* b, rf_spectrum** out) {
  return guarded([&] {
    auto& result = deref(out, "out");
    const auto& m = kernel_of(k);
    const RunId run = m.run();
    const std::string source = to_string(m.provenance().source);
    const FeatureBasis* basis = b ? &b->b : nullptr;
    if (basis)
      require(basis->run() == run, ErrorKind::Mismatch, "basis and kernel come from different runs");
    const bool want_vectors = basis != nullptr;
    Eigenpairs eig = consume ? dense_spectrum(std::move(*k->k).release_values(), want_vectors)
                             : dense_spectrum(m, want_vectors);
    if (consume) k->k.reset();
    result = new rf_spectrum{
        make_spectrum_report(eig.values, want_vectors ? &eig.vectors : nullptr, basis, run.d, run.p, source)};
  });
}

rf_status rf_spectrum_topk(const rf_weights* w, rf_source source, size_t k, uint64_t seed, double tol,
                           rf_spectrum** out) {
  return guarded([&] {
    const auto& weights = deref(w, "weights").w;
    auto& result = deref(out, "out");
    const Source s = to_source(source);
    require(s == Source::ClosedForm || s == Source::Approx, ErrorKind::InvalidArgument,
            "top-k spectra support the closed and approx sources");
    std::optional<FeatureBasis> basis;
    if (s == Source::Approx) basis.emplace(weights);
    const SymmetricOperator op = s == Source::Approx ? approx_operator(*basis) : closed_form_operator(weights);
    LanczosOptions lo;
    lo.k = k;
    lo.seed = seed;
    if (tol > 0.0) lo.tol = tol;
    lo.want_vectors = false;
    const TopK top = topk_spectrum(op, lo);
    result = new rf_spectrum{make_spectrum_report(top.values, nullptr, nullptr, weights.d(), weights.p(), to_string(s))};
  });
}

rf_status rf_spectrum_count(const rf_spectrum* s, size_t* out) {
  return guarded([&] { deref(out, "out") = static_cast<size_t>(deref(s, "spectrum").report.eigenvalues.size()); });
}

rf_status rf_spectrum_value(const rf_spectrum* s, size_t rank, double* out) {
  return guarded([&] {
    const auto& v = deref(s, "spectrum").report.eigenvalues;
    require(rank < static_cast<size_t>(v.size()), ErrorKind::InvalidArgument, "rank out of range");
    deref(out, "out") = v(static_cast<Eigen::Index>(rank));
  });
}

rf_status rf_spectrum_group(const rf_spectrum* s, int group, size_t* size, double* mean) {
  return guarded([&] {
    const auto& g = group_at(s, group);
    if (size) *size = g.size;
    if (mean) *mean = g.mean;
  });
}

rf_status rf_spectrum_reference(const rf_spectrum* s, int group, double* out) {
  return guarded([&] {
    require(group >= 0 && group < 3, ErrorKind::InvalidArgument, "reference levels exist for groups 0..2");
    deref(out, "out") = deref(s, "spectrum").report.reference[static_cast<std::size_t>(group)];
  });
}

rf_status rf_spectrum_gap_ratio(const rf_spectrum* s, int edge, double* out) {
  return guarded([&] {
    require(edge >= 0 && edge < 3, ErrorKind::InvalidArgument, "edge must be in 0..2");
    const auto& r = deref(s, "spectrum").report.groups.gap_ratios[static_cast<std::size_t>(edge)];
    require(r.has_value(), ErrorKind::Domain, "gap ratio undefined at this edge");
    deref(out, "out") = *r;
  });
}

rf_status rf_spectrum_write_csv(const rf_spectrum* s, const char* path) {
  return guarded([&] { write_spectrum_csv(&deref(path, "path"), deref(s, "spectrum").report); });
}

rf_status rf_spectrum_write_json(const rf_spectrum* s, const char* path, const char* extra_json) {
  return guarded(
      [&] { write_text(&deref(path, "path"), spectrum_json(deref(s, "spectrum").report, extra_of(extra_json))); });
}

void rf_spectrum_free(rf_spectrum* s) { delete s; }

void rf_certify_options_init(rf_certify_options* o) {
  if (!o) return;
  *o = rf_certify_options{0.0, 1, 0.25, 1.0, 0};
}

rf_status rf_xi(size_t d, double eta, int literal, double* out) {
  return guarded([&] { deref(out, "out") = xi_of_d(d, eta, literal != 0).xi; });
}

rf_status rf_certify(const rf_weights* w, const rf_kernel* k, const rf_certify_options* options,
                     rf_certificate** out) {
  return guarded([&] {
    const auto& weights = deref(w, "weights").w;
    const auto& o = deref(options, "options");
    auto& result = deref(out, "out");
    const XiMachinery xi = xi_of_d(weights.d(), o.eta, o.literal_xi != 0);
    const FeatureBasis basis(weights);
    const GramReport geometry = basis_geometry(basis);

    CertifyInputs in;
    QuotientTable quotients;
    if (k) {
      const auto& j = kernel_of(k);
      require(j.run() == weights.run(), ErrorKind::Mismatch, "kernel and weights come from different runs");
      quotients = rayleigh_quotients(j, basis);
      in.j_run = j.run();
      in.trace = j.trace();
    } else {
      quotients = rayleigh_quotients(closed_form_operator(weights), basis);
      in.j_run = weights.run();
      in.trace = column_norms(weights).squaredNorm() / 2.0;
    }
    in.quotients = &quotients;
    in.geometry = &geometry;
    const double delta = o.use_observed ? observed_delta(geometry, xi) : o.delta;
    result = new rf_certificate{certify_run(in, xi, delta, o.c)};
  });
}

rf_status rf_certificate_summary(const rf_certificate* c, int* all_pass, size_t* failures, double* delta,
                                 double* delta_star) {
  return guarded([&] {
    const auto& r = deref(c, "certificate").report;
    if (all_pass) *all_pass = r.all_pass() ? 1 : 0;
    if (failures) *failures = r.failures();
    if (delta) *delta = r.delta;
    if (delta_star) *delta_star = r.delta_star;
  });
}

rf_status rf_certificate_check_count(const rf_certificate* c, size_t* out) {
  return guarded([&] { deref(out, "out") = deref(c, "certificate").report.checks.size(); });
}

rf_status rf_certificate_check(const rf_certificate* c, size_t index, const char** claim, double* lhs, double* rhs,
                               int* pass) {
  return guarded([&] {
    const auto& checks = deref(c, "certificate").report.checks;
    require(index < checks.size(), ErrorKind::InvalidArgument, "check index out of range");
    const auto& ch = checks[index];
    if (claim) *claim = ch.claim.c_str();
    if (lhs) *lhs = ch.lhs;
    if (rhs) *rhs = ch.rhs;
    if (pass) *pass = ch.pass ? 1 : 0;
  });
}

rf_status rf_certificate_write_json(const rf_certificate* c, const char* path, const char* extra_json) {
  return guarded([&] {
    write_text(&deref(path, "path"), certificate_json(deref(c, "certificate").report, extra_of(extra_json)));
  });
}

rf_status rf_certificate_write_csv(const rf_certificate* c, const char* path) {
  return guarded([&] { write_checks_csv(&deref(path, "path"), deref(c, "certificate").report); });
}

void rf_certificate_free(rf_certificate* c) { delete c; }

}  // extern "C"
