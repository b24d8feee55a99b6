#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "relufim/bounds.hpp"
#include "relufim/kernel.hpp"
#include "relufim/spectrum.hpp"
#include "relufim/weights.hpp"

namespace relufim {

inline constexpr int kSchemaVersion = 1;

// Binary matrix files: a 48-byte little-endian header
//   magic "RFIMMAT\0" | u32 version | u32 kind | u64 d | u64 p | u64 seed | f64 scale
// followed by row-major doubles (d x p for weights, p x p for kernels).
// Every binary file has a JSON sidecar at "<path>.json".

void save_weights(const std::filesystem::path& path, const WeightMatrix& w);
WeightMatrix load_weights(const std::filesystem::path& path);

void save_kernel(const std::filesystem::path& path, const KernelMatrix& j);
/// Reads the matrix and its provenance from the sidecar.
KernelMatrix load_kernel(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// d rows of p comma-separated entries.
void write_weights_csv(const std::filesystem::path& path, const WeightMatrix& w);

/// rank,eigenvalue,group with 1-based ranks and groups 1..4 (4 = beyond the grouped count).
void write_spectrum_csv(const std::filesystem::path& path, const SpectrumReport& report);

/// Group means, predicted levels, gap ratios and principal angles. `extra`
/// is a JSON object merged into the top level (may be empty).
std::string spectrum_json(const SpectrumReport& report, const std::string& extra = {});

/// claim,lhs,rhs,relation,margin,pass for every check.
void write_checks_csv(const std::filesystem::path& path, const CertificateReport& report);

/// vector-id,value,bound,pass for the Rayleigh-quotient floors of a certificate.
void write_quotient_csv(const std::filesystem::path& path, const CertificateReport& report);

/// d,p,seed,delta,delta_star,xi,floor,checks,passed: one row per run.
void write_sweep_csv(const std::filesystem::path& path, const std::vector<CertificateReport>& runs);

std::string certificate_json(const CertificateReport& report, const std::string& extra = {});

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace relufim
