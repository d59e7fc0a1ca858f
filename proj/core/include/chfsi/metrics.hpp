#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chfsi/solver.hpp"

namespace chfsi {

/// One CSV line of a benchmark report.
struct MetricsRow {
    std::string label;
    Index ell = 0;
    Index n = 0;
    Index nev = 0;
    double tol = 0.0;
    int loops = 0;
    std::uint64_t matvecs = 0;
    double t_lanczos = 0.0;
    double t_filter = 0.0;
    double t_qr = 0.0;
    double t_rr = 0.0;
    double t_lock = 0.0;
    double t_opt = 0.0;
    double t_total = 0.0;
    std::optional<double> speedup;
    std::optional<double> efficiency;

    bool operator==(const MetricsRow&) const = default;
};

inline constexpr const char* kReportHeader =
    "label,ell,n,nev,tol,loops,matvecs,t_lanczos,t_filter,t_qr,t_rr,t_lock,t_opt,t_total,speedup,efficiency";

/// Fills a row from a solve report; times are truncated to microseconds.
MetricsRow metrics_from_report(const std::string& label, Index ell, Index n, Index nev, double tol,
                               const SolveReport& report);

/// t_baseline / t_variant.
double compute_speedup(double t_baseline, double t_variant);

/// Strong-scaling efficiency (t_ref * p_ref) / (t_p * p).
double parallel_efficiency(double t_ref, int p_ref, double t_p, int p);

std::string render_report(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> parse_report(const std::string& text);
void emit_report(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_report(const std::filesystem::path& path);

}  // namespace chfsi
