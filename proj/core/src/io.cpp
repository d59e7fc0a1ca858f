#include "chfsi/io.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace chfsi {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(Field field) { return field == Field::complex ? "complex" : "real"; }

Field field_from_string(const std::string& name) {
    if (name == "real") return Field::real;
    if (name == "complex") return Field::complex;
    throw ConfigError("unknown field '" + name + "' (expected real or complex)");
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

class LineReader {
public:
    explicit LineReader(const fs::path& path) : in_(path), path_(path) {
        if (!in_) throw IoError("cannot open matrix file", path.string());
    }
    bool next(std::string& line) {
        if (!std::getline(in_, line)) return false;
        ++line_no_;
        return true;
    }
    // Next line that is neither blank nor a comment.
    bool next_data(std::string& line) {
        while (next(line)) {
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '%') continue;
            return true;
        }
        return false;
    }
    std::size_t line_no() const { return line_no_; }

private:
    std::ifstream in_;
    fs::path path_;
    std::size_t line_no_ = 0;
};

std::vector<double> parse_numbers(const std::string& line, std::size_t line_no) {
    std::vector<double> out;
    const char* p = line.c_str();
    while (*p) {
        while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
        if (!*p) break;
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(p, &end);
        if (end == p) throw ParseError("malformed number '" + std::string(p) + "'", line_no);
        if (!std::isfinite(v)) throw ParseError("non-finite entry", line_no);
        out.push_back(v);
        p = end;
    }
    return out;
}

MatrixHeader parse_header(LineReader& reader) {
    std::string line;
    if (!reader.next(line)) throw ParseError("empty matrix file", 1);
    std::istringstream banner(line);
    std::string tag, object, layout, field, symmetry;
    banner >> tag >> object >> layout >> field >> symmetry;
    if (tag != "%%MatrixMarket" || lower(object) != "matrix") {
        throw ParseError("missing %%MatrixMarket matrix banner", reader.line_no());
    }
    MatrixHeader h;
    layout = lower(layout);
    field = lower(field);
    h.symmetry = lower(symmetry);
    if (layout == "array") h.format = MatrixFormat::dense;
    else if (layout == "coordinate") h.format = MatrixFormat::coordinate_hermitian;
    else throw ParseError("unsupported layout '" + layout + "'", reader.line_no());
    if (field == "real" || field == "integer" || field == "double") h.field = Field::real;
    else if (field == "complex") h.field = Field::complex;
    else throw ParseError("unsupported field '" + field + "'", reader.line_no());
    if (h.symmetry != "general" && h.symmetry != "symmetric" && h.symmetry != "hermitian") {
        throw ParseError("unsupported symmetry '" + h.symmetry + "'", reader.line_no());
    }
    if (h.symmetry == "hermitian" && h.field != Field::complex) {
        throw ParseError("hermitian symmetry requires a complex field", reader.line_no());
    }
    if (!reader.next_data(line)) throw ParseError("missing size line", reader.line_no() + 1);
    const auto sizes = parse_numbers(line, reader.line_no());
    const std::size_t want = h.format == MatrixFormat::dense ? 2 : 3;
    if (sizes.size() != want) throw ParseError("malformed size line", reader.line_no());
    h.rows = static_cast<Index>(sizes[0]);
    h.cols = static_cast<Index>(sizes[1]);
    if (h.format == MatrixFormat::coordinate_hermitian) {
        h.nnz = static_cast<Index>(sizes[2]);
        if (h.nnz < 0 || static_cast<double>(h.nnz) != sizes[2]) throw ParseError("invalid entry count", reader.line_no());
    }
    if (h.rows < 1 || h.cols < 0 || static_cast<double>(h.rows) != sizes[0] || static_cast<double>(h.cols) != sizes[1]) {
        throw ParseError("invalid matrix dimensions", reader.line_no());
    }
    if (h.symmetry != "general" && h.rows != h.cols) {
        throw ParseError("symmetric/hermitian matrix must be square", reader.line_no());
    }
    return h;
}

template <Scalar T>
T make_entry(const std::vector<double>& nums, std::size_t offset, Field field) {
    if constexpr (is_complex_v<T>) {
        return field == Field::complex ? T(nums[offset], nums[offset + 1]) : T(nums[offset], 0.0);
    } else {
        return nums[offset];
    }
}

template <Scalar T>
T mirror(const T& v, const std::string& symmetry) {
    return symmetry == "hermitian" ? conj_of<T>(v) : v;
}

void put_number(std::string& out, double v) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

MatrixHeader read_matrix_header(const fs::path& path) {
    LineReader reader(path);
    return parse_header(reader);
}

template <Scalar T>
Matrix<T> read_matrix(const fs::path& path) {
    LineReader reader(path);
    const MatrixHeader h = parse_header(reader);
    if (!is_complex_v<T> && h.field == Field::complex) {
        throw ParseError("complex matrix cannot be read into a real matrix", 1);
    }
    const std::size_t per_entry = h.field == Field::complex ? 2 : 1;
    const bool mirrored = h.symmetry != "general";
    Matrix<T> m = Matrix<T>::Zero(h.rows, h.cols);
    std::string line;

    if (h.format == MatrixFormat::dense) {
        for (Index j = 0; j < h.cols; ++j) {
            for (Index i = mirrored ? j : 0; i < h.rows; ++i) {
                if (!reader.next_data(line)) throw ParseError("fewer entries than the size line declares", reader.line_no() + 1);
                const auto nums = parse_numbers(line, reader.line_no());
                if (nums.size() != per_entry) throw ParseError("wrong number of values in entry", reader.line_no());
                const T v = make_entry<T>(nums, 0, h.field);
                m(i, j) = v;
                if (mirrored && i != j) m(j, i) = mirror(v, h.symmetry);
            }
        }
    } else {
        const auto nnz = static_cast<std::size_t>(h.nnz);
        Matrix<unsigned char> seen = Matrix<unsigned char>::Zero(h.rows, h.cols);
        const double tol = 1e-12;
        for (std::size_t e = 0; e < nnz; ++e) {
            if (!reader.next_data(line)) throw ParseError("fewer entries than the size line declares", reader.line_no() + 1);
            const auto nums = parse_numbers(line, reader.line_no());
            if (nums.size() != 2 + per_entry) throw ParseError("wrong number of values in entry", reader.line_no());
            const auto i = static_cast<Index>(nums[0]) - 1;
            const auto j = static_cast<Index>(nums[1]) - 1;
            if (i < 0 || j < 0 || i >= h.rows || j >= h.cols) throw ParseError("entry index out of range", reader.line_no());
            const T v = make_entry<T>(nums, 2, h.field);
            if (mirrored && i == j && h.symmetry == "hermitian" && std::abs(v - conj_of<T>(v)) > tol * (1.0 + std::abs(v))) {
                throw ParseError("hermitian diagonal entry has an imaginary part", reader.line_no());
            }
            if (mirrored && seen(j, i) && i != j) {
                if (std::abs(m(j, i) - mirror(v, h.symmetry)) > tol * (1.0 + std::abs(v))) {
                    throw ParseError("entry contradicts its mirrored counterpart", reader.line_no());
                }
            }
            m(i, j) = v;
            seen(i, j) = 1;
            if (mirrored && i != j) {
                m(j, i) = mirror(v, h.symmetry);
                seen(j, i) = 1;
            }
        }
    }
    if (reader.next_data(line)) throw ParseError("more entries than the size line declares", reader.line_no());
    return m;
}

template <Scalar T>
void write_matrix(const Matrix<T>& m, const fs::path& path, MatrixFormat format) {
    if (m.rows() < 1 || m.cols() < 1) throw ContractViolation("write_matrix: empty matrix");
    if (!m.allFinite()) throw ContractViolation("write_matrix: non-finite entries");
    const std::string field = is_complex_v<T> ? "complex" : "real";
    std::string out;
    const auto put = [&](const T& v) {
        if constexpr (is_complex_v<T>) {
            put_number(out, v.real());
            out.push_back(' ');
            put_number(out, v.imag());
        } else {
            put_number(out, v);
        }
    };
    if (format == MatrixFormat::dense) {
        out += "%%MatrixMarket matrix array " + field + " general\n";
        out += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
        for (Index j = 0; j < m.cols(); ++j) {
            for (Index i = 0; i < m.rows(); ++i) {
                put(m(i, j));
                out.push_back('\n');
            }
        }
    } else {
        if (m.rows() != m.cols() || hermitian_defect(m) > 1e-12) {
            throw ContractViolation("write_matrix: coordinate-hermitian output needs a hermitian matrix");
        }
        const std::string symmetry = is_complex_v<T> ? "hermitian" : "symmetric";
        std::size_t nnz = 0;
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = j; i < m.rows(); ++i)
                if (m(i, j) != T(0.0)) ++nnz;
        out += "%%MatrixMarket matrix coordinate " + field + " " + symmetry + "\n";
        out += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + " " + std::to_string(nnz) + "\n";
        for (Index j = 0; j < m.cols(); ++j) {
            for (Index i = j; i < m.rows(); ++i) {
                if (m(i, j) == T(0.0)) continue;
                T v = m(i, j);
                if constexpr (is_complex_v<T>) {
                    if (i == j) v = T(v.real(), 0.0);
                }
                out += std::to_string(i + 1) + " " + std::to_string(j + 1) + " ";
                put(v);
                out.push_back('\n');
            }
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing", path.string());
    f << out;
    if (!f) throw IoError("write failed", path.string());
}

// ---------------------------------------------------------------------------

namespace {

json to_json(const GeneratorConfig& g) {
    return json{{"n", g.n},
                {"N", g.length},
                {"nev", g.nev},
                {"theta0", g.theta0},
                {"thetaN", g.thetaN},
                {"generalized", g.generalized},
                {"seed", g.seed},
                {"spectrum",
                 {{"kind", to_string(g.spectrum.kind)},
                  {"lo", g.spectrum.lo},
                  {"hi", g.spectrum.hi},
                  {"values", g.spectrum.values},
                  {"cluster_size", g.spectrum.cluster_size},
                  {"gap_factor", g.spectrum.gap_factor},
                  {"drift", g.spectrum.drift}}}};
}

GeneratorConfig generator_from_json(const json& j) {
    GeneratorConfig g;
    g.n = j.at("n").get<Index>();
    g.length = j.at("N").get<Index>();
    g.nev = j.at("nev").get<Index>();
    g.theta0 = j.at("theta0").get<double>();
    g.thetaN = j.at("thetaN").get<double>();
    g.generalized = j.at("generalized").get<bool>();
    g.seed = j.at("seed").get<std::uint64_t>();
    const json& s = j.at("spectrum");
    g.spectrum.kind = spectrum_kind_from_string(s.at("kind").get<std::string>());
    g.spectrum.lo = s.at("lo").get<double>();
    g.spectrum.hi = s.at("hi").get<double>();
    g.spectrum.values = s.at("values").get<std::vector<double>>();
    g.spectrum.cluster_size = s.at("cluster_size").get<Index>();
    g.spectrum.gap_factor = s.at("gap_factor").get<double>();
    g.spectrum.drift = s.at("drift").get<double>();
    return g;
}

json to_json(const SolverConfig& c) {
    return json{{"nev", c.nev},       {"tol", c.tol},
                {"deg0", c.deg0},     {"cap", c.cap},
                {"buffer", c.buffer}, {"max_loops", c.max_loops},
                {"lanczos_steps", c.lanczos_steps}, {"seed", c.seed},
                {"optimize_degrees", c.optimize_degrees}};
}

SolverConfig solver_from_json(const json& j) {
    SolverConfig c;
    c.nev = j.at("nev").get<Index>();
    c.tol = j.at("tol").get<double>();
    c.deg0 = j.at("deg0").get<int>();
    c.cap = j.at("cap").get<int>();
    c.buffer = j.at("buffer").get<Index>();
    c.max_loops = j.at("max_loops").get<int>();
    c.lanczos_steps = j.at("lanczos_steps").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.optimize_degrees = j.at("optimize_degrees").get<bool>();
    return c;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open", path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing", path.string());
    f << text;
    if (!f) throw IoError("write failed", path.string());
}

}  // namespace

std::string render_manifest(const RunManifest& m) {
    json problems = json::array();
    for (const auto& p : m.problems) problems.push_back({{"index", p.index}, {"matrix", p.matrix}, {"b_matrix", p.b_matrix}});
    json j{{"version", m.version},
           {"seed", m.seed},
           {"tol", m.tol},
           {"field", to_string(m.field)},
           {"generator", to_json(m.generator)},
           {"solver", to_json(m.solver)},
           {"schedule", m.schedule},
           {"problems", problems},
           {"created", m.created}};
    return j.dump(2) + "\n";
}

RunManifest parse_manifest(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("manifest is not valid JSON: ") + e.what(), line_of(text, e.byte));
    }
    try {
        RunManifest m;
        m.version = j.at("version").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.tol = j.at("tol").get<double>();
        m.field = field_from_string(j.at("field").get<std::string>());
        m.generator = generator_from_json(j.at("generator"));
        m.solver = solver_from_json(j.at("solver"));
        m.schedule = j.at("schedule").get<std::vector<double>>();
        for (const auto& p : j.at("problems")) {
            m.problems.push_back(ProblemEntry{p.at("index").get<Index>(), p.at("matrix").get<std::string>(),
                                              p.at("b_matrix").get<std::string>()});
        }
        m.created = j.at("created").get<std::string>();
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest field error: ") + e.what(), 0);
    }
}

void write_manifest(const RunManifest& manifest, const fs::path& path) { spit(path, render_manifest(manifest)); }

RunManifest read_manifest(const fs::path& path) { return parse_manifest(slurp(path)); }

template <Scalar T>
RunManifest write_sequence(const EigenproblemSequence<T>& seq, const fs::path& dir, const std::string& created) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory", dir.string());
    RunManifest m;
    m.seed = seq.config.seed;
    m.field = is_complex_v<T> ? Field::complex : Field::real;
    m.generator = seq.config;
    m.solver.nev = seq.config.nev;
    m.solver.seed = seq.config.seed;
    m.tol = m.solver.tol;
    m.schedule = seq.schedule;
    m.created = created;
    for (Index ell = 0; ell < seq.size(); ++ell) {
        char name[64];
        std::snprintf(name, sizeof name, "problem_%03lld.mtx", static_cast<long long>(ell + 1));
        ProblemEntry entry{ell + 1, name, ""};
        write_matrix(seq.a[static_cast<std::size_t>(ell)], dir / name);
        if (seq.generalized()) {
            std::snprintf(name, sizeof name, "overlap_%03lld.mtx", static_cast<long long>(ell + 1));
            entry.b_matrix = name;
            write_matrix(seq.b[static_cast<std::size_t>(ell)], dir / name);
        }
        m.problems.push_back(std::move(entry));
    }
    write_manifest(m, dir / "manifest.json");
    return m;
}

template <Scalar T>
LoadedSequence<T> load_sequence(const RunManifest& manifest, const fs::path& manifest_path) {
    const fs::path base = manifest_path.parent_path();
    LoadedSequence<T> out;
    for (const auto& p : manifest.problems) {
        out.a.push_back(read_matrix<T>(base / p.matrix));
        if (!p.b_matrix.empty()) out.b.push_back(read_matrix<T>(base / p.b_matrix));
    }
    if (!out.b.empty() && out.b.size() != out.a.size()) {
        throw ParseError("manifest lists overlap matrices for only some problems", 0);
    }
    return out;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

#define CHFSI_INSTANTIATE_IO(T)                                                                           \
    template Matrix<T> read_matrix<T>(const fs::path&);                                                   \
    template void write_matrix<T>(const Matrix<T>&, const fs::path&, MatrixFormat);                       \
    template RunManifest write_sequence<T>(const EigenproblemSequence<T>&, const fs::path&, const std::string&); \
    template LoadedSequence<T> load_sequence<T>(const RunManifest&, const fs::path&);

CHFSI_INSTANTIATE_IO(double)
CHFSI_INSTANTIATE_IO(complex)

#undef CHFSI_INSTANTIATE_IO

}  // namespace chfsi
