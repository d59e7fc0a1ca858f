#include "chfsi/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chfsi/io.hpp"

namespace chfsi {

namespace {

double truncate_us(double seconds) { return std::trunc(seconds * 1e6) / 1e6; }

void put(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

template <class Int>
void put_int(std::string& out, Int v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class V>
V parse_field(const std::string& s, std::size_t line_no) {
    V v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ParseError("bad CSV field '" + s + "'", line_no);
    }
    return v;
}

std::optional<double> parse_optional(const std::string& s, std::size_t line_no) {
    if (s.empty()) return std::nullopt;
    return parse_field<double>(s, line_no);
}

}  // namespace

MetricsRow metrics_from_report(const std::string& label, Index ell, Index n, Index nev, double tol,
                               const SolveReport& report) {
    MetricsRow row;
    row.label = label;
    row.ell = ell;
    row.n = n;
    row.nev = nev;
    row.tol = tol;
    row.loops = report.loops;
    row.matvecs = report.matvecs_total;
    row.t_lanczos = truncate_us(report.times.lanczos);
    row.t_filter = truncate_us(report.times.filter);
    row.t_qr = truncate_us(report.times.qr);
    row.t_rr = truncate_us(report.times.rr);
    row.t_lock = truncate_us(report.times.lock);
    row.t_opt = truncate_us(report.times.optimization);
    row.t_total = truncate_us(report.times.total);
    return row;
}

double compute_speedup(double t_baseline, double t_variant) {
    if (!(t_baseline > 0.0) || !(t_variant > 0.0)) throw ContractViolation("compute_speedup: times must be positive");
    return t_baseline / t_variant;
}

double parallel_efficiency(double t_ref, int p_ref, double t_p, int p) {
    if (!(t_ref > 0.0) || !(t_p > 0.0) || p_ref < 1 || p < 1) {
        throw ContractViolation("parallel_efficiency: inputs must be positive");
    }
    return (t_ref * p_ref) / (t_p * p);
}

std::string render_report(const std::vector<MetricsRow>& rows) {
    std::string out = kReportHeader;
    out.push_back('\n');
    for (const auto& r : rows) {
        if (r.label.find_first_of(",\"\r\n") != std::string::npos) {
            throw ContractViolation("render_report: label must not contain commas, quotes or newlines");
        }
        out += r.label;
        out.push_back(',');
        put_int(out, r.ell);
        out.push_back(',');
        put_int(out, r.n);
        out.push_back(',');
        put_int(out, r.nev);
        out.push_back(',');
        put(out, r.tol);
        out.push_back(',');
        put_int(out, r.loops);
        out.push_back(',');
        put_int(out, r.matvecs);
        for (double t : {r.t_lanczos, r.t_filter, r.t_qr, r.t_rr, r.t_lock, r.t_opt, r.t_total}) {
            out.push_back(',');
            put(out, t);
        }
        out.push_back(',');
        if (r.speedup) put(out, *r.speedup);
        out.push_back(',');
        if (r.efficiency) put(out, *r.efficiency);
        out.push_back('\n');
    }
    return out;
}

std::vector<MetricsRow> parse_report(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty report", 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kReportHeader) throw ParseError("unexpected report header", line_no);
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 16) throw ParseError("expected 16 fields", line_no);
        MetricsRow r;
        r.label = f[0];
        r.ell = parse_field<Index>(f[1], line_no);
        r.n = parse_field<Index>(f[2], line_no);
        r.nev = parse_field<Index>(f[3], line_no);
        r.tol = parse_field<double>(f[4], line_no);
        r.loops = parse_field<int>(f[5], line_no);
        r.matvecs = parse_field<std::uint64_t>(f[6], line_no);
        r.t_lanczos = parse_field<double>(f[7], line_no);
        r.t_filter = parse_field<double>(f[8], line_no);
        r.t_qr = parse_field<double>(f[9], line_no);
        r.t_rr = parse_field<double>(f[10], line_no);
        r.t_lock = parse_field<double>(f[11], line_no);
        r.t_opt = parse_field<double>(f[12], line_no);
        r.t_total = parse_field<double>(f[13], line_no);
        r.speedup = parse_optional(f[14], line_no);
        r.efficiency = parse_optional(f[15], line_no);
        rows.push_back(std::move(r));
    }
    return rows;
}

void emit_report(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
    const std::string text = render_report(rows);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing", path.string());
    f << text;
    if (!f) throw IoError("write failed", path.string());
}

std::vector<MetricsRow> read_report(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open", path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_report(ss.str());
}

}  // namespace chfsi
