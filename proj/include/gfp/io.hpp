#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfp/errors.hpp"
#include "gfp/fredholm.hpp"
#include "gfp/functionals.hpp"
#include "gfp/ibp.hpp"
#include "gfp/simulate.hpp"

namespace gfp {

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw IoError("malformed number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// Writes the full content to a temporary file in the target directory and
/// renames it into place, so no partial output survives a failure.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string());
  }
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Matrix CSV: header line "n=<n>", then n+1 rows of n+1 comma-separated
// values (row-major). Shared by kernels and covariance matrices.
// ---------------------------------------------------------------------------

inline std::string matrix_to_csv(const Eigen::MatrixXd& m, int n) {
  std::string s = "n=" + std::to_string(n) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) s += ',';
      s += detail::format_double(m(i, j));
    }
    s += '\n';
  }
  return s;
}

inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m, int n) {
  if (m.rows() != n + 1 || m.cols() != n + 1) {
    throw std::invalid_argument("write_matrix_csv: matrix must be (n+1) x (n+1)");
  }
  atomic_write_text(path, matrix_to_csv(m, n));
}

inline std::pair<int, Eigen::MatrixXd> read_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (line.rfind("n=", 0) != 0) throw IoError(path.string() + ": expected header 'n=<n>'");
  int n = 0;
  try {
    n = std::stoi(line.substr(2));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": bad grid size in header");
  }
  if (n < 2) throw IoError(path.string() + ": grid size must be >= 2");
  Eigen::MatrixXd m(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    if (!std::getline(in, line)) throw IoError(path.string() + ": missing matrix rows");
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != static_cast<std::size_t>(n + 1)) {
      throw IoError(path.string() + ": row " + std::to_string(i) + " has " +
                    std::to_string(cells.size()) + " columns, expected " + std::to_string(n + 1));
    }
    for (int j = 0; j <= n; ++j) m(i, j) = detail::parse_double(cells[static_cast<std::size_t>(j)]);
  }
  return {n, std::move(m)};
}

inline void write_kernel_csv(const std::filesystem::path& path, const Kernel& k) {
  write_matrix_csv(path, k.matrix, k.grid.n);
}

inline Kernel read_kernel_csv(const std::filesystem::path& path) {
  auto [n, m] = read_matrix_csv(path);
  return Kernel{make_grid(n), std::move(m), std::nullopt, std::nullopt};
}

inline void write_covariance_csv(const std::filesystem::path& path, const CovarianceMatrix& r) {
  write_matrix_csv(path, r.matrix, r.grid.n);
}

inline CovarianceMatrix read_covariance_csv(const std::filesystem::path& path) {
  auto [n, m] = read_matrix_csv(path);
  CovarianceMatrix r{make_grid(n), std::move(m)};
  r.validate();
  return r;
}

// ---------------------------------------------------------------------------
// Bracket CSV: one "t,<M>_t" row per grid node.
// ---------------------------------------------------------------------------

inline void write_bracket_csv(const std::filesystem::path& path, const BracketFunction& b,
                              const Grid& g) {
  std::string s;
  for (int i = 0; i <= g.n; ++i) {
    s += detail::format_double(g.nodes(i));
    s += ',';
    s += detail::format_double(b.samples(i));
    s += '\n';
  }
  atomic_write_text(path, s);
}

inline std::pair<BracketFunction, Grid> read_bracket_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<double> t;
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 2) throw IoError(path.string() + ": expected two columns");
    t.push_back(detail::parse_double(cells[0]));
    v.push_back(detail::parse_double(cells[1]));
  }
  if (t.size() < 3) throw IoError(path.string() + ": too few rows for a bracket");
  const int n = static_cast<int>(t.size()) - 1;
  Grid g = make_grid(n);
  for (int i = 0; i <= n; ++i) {
    if (std::abs(t[static_cast<std::size_t>(i)] - g.nodes(i)) > 1e-9) {
      throw IoError(path.string() + ": times are not the uniform grid nodes");
    }
  }
  BracketFunction b{Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))};
  b.validate(g);
  return {std::move(b), std::move(g)};
}

// ---------------------------------------------------------------------------
// Ensemble CSV: first row = node times, each subsequent row = one path.
// A JSON metadata sidecar {generator, seed, M, n} sits next to the CSV
// with its extension replaced by .json.
// ---------------------------------------------------------------------------

inline std::filesystem::path ensemble_sidecar_path(std::filesystem::path csv_path) {
  csv_path.replace_extension(".json");
  return csv_path;
}

inline void write_ensemble_csv(const std::filesystem::path& path, const PathEnsemble& ens) {
  std::string s;
  for (int i = 0; i <= ens.grid.n; ++i) {
    if (i) s += ',';
    s += detail::format_double(ens.grid.nodes(i));
  }
  s += '\n';
  for (Eigen::Index p = 0; p < ens.paths.rows(); ++p) {
    for (Eigen::Index i = 0; i < ens.paths.cols(); ++i) {
      if (i) s += ',';
      s += detail::format_double(ens.paths(p, i));
    }
    s += '\n';
  }
  atomic_write_text(path, s);

  nlohmann::json meta{{"generator", ens.meta.generator},
                      {"seed", ens.meta.seed},
                      {"M", ens.meta.path_count},
                      {"n", ens.meta.n}};
  atomic_write_text(ensemble_sidecar_path(path), meta.dump(2) + "\n");
}

inline PathEnsemble read_ensemble_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty ensemble file");
  const auto head = detail::split_csv_line(line);
  if (head.size() < 3) throw IoError(path.string() + ": too few nodes");
  const int n = static_cast<int>(head.size()) - 1;
  Grid g = make_grid(n);
  for (int i = 0; i <= n; ++i) {
    if (std::abs(detail::parse_double(head[static_cast<std::size_t>(i)]) - g.nodes(i)) > 1e-9) {
      throw IoError(path.string() + ": node times are not the uniform grid");
    }
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != head.size()) {
      throw IoError(path.string() + ": path row with wrong column count");
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) row[j] = detail::parse_double(cells[j]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path.string() + ": ensemble has no paths");

  PathEnsemble ens;
  ens.grid = std::move(g);
  ens.paths.resize(static_cast<Eigen::Index>(rows.size()), n + 1);
  for (std::size_t p = 0; p < rows.size(); ++p) {
    for (int i = 0; i <= n; ++i) {
      ens.paths(static_cast<Eigen::Index>(p), i) = rows[p][static_cast<std::size_t>(i)];
    }
  }
  ens.meta = {"file", 0, static_cast<int>(rows.size()), n};

  const auto sidecar = ensemble_sidecar_path(path);
  if (std::filesystem::exists(sidecar)) {
    try {
      const auto meta = nlohmann::json::parse(read_text(sidecar));
      ens.meta.generator = meta.value("generator", std::string("file"));
      ens.meta.seed = meta.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception&) {
      // sidecar is advisory on input
    }
  }
  return ens;
}

// ---------------------------------------------------------------------------
// Functional JSON: {"g": <prefix expression>, "integrands":
// [{"breakpoints": [...], "values": [...]}, ...]}.
// ---------------------------------------------------------------------------

inline nlohmann::json functional_to_json(const SmoothFunctional& f) {
  nlohmann::json integrands = nlohmann::json::array();
  for (const auto& e : *f.integrands) {
    integrands.push_back({{"breakpoints", e.breakpoints()}, {"values", e.values()}});
  }
  return {{"g", f.g.to_prefix()}, {"integrands", integrands}};
}

inline SmoothFunctional functional_from_json(const nlohmann::json& j) {
  try {
    Expr g = Expr::parse_prefix(j.at("g").get<std::string>());
    std::vector<StepFunction> integrands;
    for (const auto& e : j.at("integrands")) {
      integrands.emplace_back(e.at("breakpoints").get<std::vector<double>>(),
                              e.at("values").get<std::vector<double>>());
    }
    return SmoothFunctional(std::move(g), std::move(integrands));
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("malformed functional JSON: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------
// Report JSON. Field names mirror the type definitions exactly.
// ---------------------------------------------------------------------------

inline nlohmann::json ibp_report_to_json(const IbpReport& r) {
  nlohmann::json j{{"lhs", r.lhs},
                   {"rhs", r.rhs},
                   {"lhs_stderr", r.lhs_stderr},
                   {"rhs_stderr", r.rhs_stderr},
                   {"residual", r.residual},
                   {"zscore", r.zscore},
                   {"M", r.sample_count},
                   {"form", ibp_form_name(r.form)},
                   {"functional_id", r.functional_id}};
  if (r.t) j["t"] = *r.t;
  return j;
}

inline nlohmann::json test_verdict_to_json(const TestVerdict& v) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : v.reports) reports.push_back(ibp_report_to_json(r));
  return {{"reports", reports},
          {"alpha", v.alpha},
          {"max_abs_zscore", v.max_abs_zscore},
          {"reject", v.reject}};
}

inline nlohmann::json stein_report_to_json(const SteinReport& r) {
  return {{"lhs", r.lhs},
          {"rhs", r.rhs},
          {"lhs_stderr", r.lhs_stderr},
          {"rhs_stderr", r.rhs_stderr},
          {"residual", r.residual},
          {"zscore", r.zscore},
          {"M", r.sample_count}};
}

}  // namespace gfp
