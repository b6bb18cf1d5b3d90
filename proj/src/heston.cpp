#include "deephedge/heston.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "deephedge/errors.hpp"
#include "deephedge/parallel.hpp"

namespace deephedge {

NormalPair correlated_normals(NormalStream& stream, double rho) {
    if (!(rho >= -1.0 && rho <= 1.0)) throw ParameterError("rho must lie in [-1, 1]");
    const double z_s = stream();
    const double z_perp = stream();
    return {z_s, rho * z_s + std::sqrt(1.0 - rho * rho) * z_perp};
}

void HestonParams::validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!(finite(mu) && finite(v0) && finite(kappa) && finite(theta) && finite(xi) && finite(rho) &&
          finite(s0)))
        throw ParameterError("Heston parameters must be finite");
    if (v0 < 0.0) throw ParameterError("v0 must be non-negative");
    if (theta < 0.0) throw ParameterError("theta must be non-negative");
    if (xi < 0.0) throw ParameterError("xi must be non-negative");
    if (kappa < 0.0) throw ParameterError("kappa must be non-negative");
    if (rho < -1.0 || rho > 1.0) throw ParameterError("rho must lie in [-1, 1]");
    if (s0 <= 0.0) throw ParameterError("s0 must be positive");
}

PathSet simulate_paths(const HestonParams& params, Eigen::Index n_paths, Eigen::Index n_steps,
                       double dt, std::uint64_t seed, unsigned threads) {
    params.validate();
    if (n_paths < 1) throw EmptyInputError("simulate_paths needs at least one path");
    if (n_steps < 0) throw ParameterError("n_steps must be non-negative");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be positive");

    PathSet out;
    out.spot.resize(n_paths, n_steps + 1);
    out.variance.resize(n_paths, n_steps + 1);
    out.dt = dt;
    out.seed = seed;

    const double sqrt_dt = std::sqrt(dt);
    parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t p) {
        NormalStream stream(stream_seed(seed, p));
        const auto row = static_cast<Eigen::Index>(p);
        double log_s = std::log(params.s0);
        double v = params.v0;
        out.spot(row, 0) = params.s0;
        out.variance(row, 0) = v;
        for (Eigen::Index t = 0; t < n_steps; ++t) {
            const auto z = correlated_normals(stream, params.rho);
            const double v_pos = std::max(v, 0.0);
            const double vol = std::sqrt(v_pos) * sqrt_dt;
            log_s += (params.mu - 0.5 * v_pos) * dt + vol * z.spot;
            v += params.kappa * (params.theta - v_pos) * dt + params.xi * vol * z.variance;
            out.spot(row, t + 1) = std::exp(log_s);
            out.variance(row, t + 1) = v;
        }
    });
    return out;
}

namespace {

void append_double(std::string& buf, double x) {
    char tmp[32];
    const auto res = std::to_chars(tmp, tmp + sizeof(tmp), x);
    buf.append(tmp, res.ptr);
}

void append_integer(std::string& buf, long long x) {
    char tmp[24];
    const auto res = std::to_chars(tmp, tmp + sizeof(tmp), x);
    buf.append(tmp, res.ptr);
}

template <typename T>
T parse_field(std::string_view field, std::size_t line) {
    T value{};
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw IoError("malformed CSV field '" + std::string(field) + "' on line " +
                      std::to_string(line));
    return value;
}

constexpr std::string_view kPathHeader = "path_id,step,spot,variance";

}  // namespace

void write_paths_csv(const PathSet& paths, std::ostream& out) {
    std::string buf;
    buf.reserve(1 << 20);
    buf.append(kPathHeader).push_back('\n');
    for (Eigen::Index p = 0; p < paths.n_paths(); ++p) {
        for (Eigen::Index t = 0; t <= paths.n_steps(); ++t) {
            append_integer(buf, p);
            buf.push_back(',');
            append_integer(buf, t);
            buf.push_back(',');
            append_double(buf, paths.spot(p, t));
            buf.push_back(',');
            append_double(buf, paths.variance(p, t));
            buf.push_back('\n');
        }
        if (buf.size() > (1 << 20)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing path CSV");
}

void save_paths_csv(const PathSet& paths, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    write_paths_csv(paths, out);
}

PathSet read_paths_csv(std::istream& in, double dt) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("path CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kPathHeader) throw IoError("unexpected path CSV header: " + line);

    struct Row {
        long long path;
        long long step;
        double spot;
        double variance;
    };
    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string_view rest(line);
        std::string_view fields[4];
        for (int i = 0; i < 4; ++i) {
            const auto comma = rest.find(',');
            if ((i < 3) == (comma == std::string_view::npos))
                throw IoError("expected 4 fields on line " + std::to_string(line_no));
            fields[i] = rest.substr(0, comma);
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        rows.push_back({parse_field<long long>(fields[0], line_no),
                        parse_field<long long>(fields[1], line_no),
                        parse_field<double>(fields[2], line_no),
                        parse_field<double>(fields[3], line_no)});
    }
    if (rows.empty()) throw EmptyInputError("path CSV has no rows");

    long long max_path = 0;
    long long max_step = 0;
    for (const auto& r : rows) {
        if (r.path < 0 || r.step < 0) throw IoError("negative path_id or step in path CSV");
        max_path = std::max(max_path, r.path);
        max_step = std::max(max_step, r.step);
    }
    const auto n_paths = static_cast<Eigen::Index>(max_path + 1);
    const auto n_cols = static_cast<Eigen::Index>(max_step + 1);
    if (static_cast<long long>(rows.size()) != n_paths * n_cols)
        throw IoError("path CSV does not form a complete path x step grid");

    PathSet out;
    out.dt = dt;
    out.spot = RowMatrix::Constant(n_paths, n_cols, std::nan(""));
    out.variance = RowMatrix::Constant(n_paths, n_cols, std::nan(""));
    for (const auto& r : rows) {
        if (!std::isnan(out.spot(r.path, r.step)))
            throw IoError("duplicate (path_id, step) in path CSV");
        out.spot(r.path, r.step) = r.spot;
        out.variance(r.path, r.step) = r.variance;
    }
    return out;
}

PathSet load_paths_csv(const std::filesystem::path& file, double dt) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    return read_paths_csv(in, dt);
}

}  // namespace deephedge
