#include "sparsefl/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace sparsefl {

namespace {

constexpr double kGridTol = 1e-9;

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, size_t row, const std::string& col) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (!s.empty() && *b == '+') ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) {
    throw DataError("row " + std::to_string(row) + ", column " + col + ": malformed or non-finite value '" + s +
                    "'");
  }
  if (!std::isfinite(v)) throw DataError("row " + std::to_string(row) + ", column " + col + ": non-finite value");
  return v;
}

}  // namespace

void Dataset::validate() const {
  const Eigen::Index m = X.rows();
  if (m < 2) throw DataError("m < 2");
  if (times.size() != m || U.size() != m || Y.size() != m) throw DataError("row count mismatch between fields");
  if (Xdot && (Xdot->rows() != m || Xdot->cols() != X.cols())) throw DataError("Xdot shape mismatch");
  if (!all_finite(times) || !all_finite(X) || !all_finite(U) || !all_finite(Y) || (Xdot && !all_finite(*Xdot))) {
    throw DataError("non-finite values");
  }
  const double dt = times(1) - times(0);
  for (Eigen::Index i = 1; i < m; ++i) {
    const double step = times(i) - times(i - 1);
    if (!(step > 0.0)) throw DataError("non-increasing times at row " + std::to_string(i));
    if (std::abs(step - dt) > kGridTol * std::max(std::abs(dt), std::abs(times(i)))) {
      throw DataError("non-uniform time grid at row " + std::to_string(i));
    }
  }
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  const auto header = split(line);
  std::map<std::string, size_t> col;
  for (size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

  for (const char* required : {"t", "x1", "u", "y"}) {
    if (!col.count(required)) throw DataError("missing column " + std::string(required));
  }
  int n = 0;
  while (col.count("x" + std::to_string(n + 1))) ++n;
  int n_dot = 0;
  while (col.count("xdot" + std::to_string(n_dot + 1))) ++n_dot;
  if (n_dot != 0 && n_dot != n) throw DataError("xdot columns must cover all " + std::to_string(n) + " states");

  std::vector<std::vector<double>> rows;
  size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw DataError("ragged row " + std::to_string(row_no) + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(cells.size()));
    }
    std::vector<double> values(cells.size());
    for (size_t j = 0; j < cells.size(); ++j) values[j] = to_double(cells[j], row_no, header[j]);
    rows.push_back(std::move(values));
  }

  const auto m = static_cast<Eigen::Index>(rows.size());
  Dataset d;
  d.times.resize(m);
  d.X.resize(m, n);
  d.U.resize(m);
  d.Y.resize(m);
  if (n_dot) d.Xdot = Eigen::MatrixXd(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& r = rows[static_cast<size_t>(i)];
    d.times(i) = r[col["t"]];
    d.U(i) = r[col["u"]];
    d.Y(i) = r[col["y"]];
    for (int j = 0; j < n; ++j) {
      d.X(i, j) = r[col["x" + std::to_string(j + 1)]];
      if (n_dot) (*d.Xdot)(i, j) = r[col["xdot" + std::to_string(j + 1)]];
    }
  }
  d.validate();
  return d;
}

void save_csv(const Dataset& d, const std::string& path, const ExtraColumns& extra) {
  d.validate();
  for (const auto& [name, values] : extra) {
    if (values.size() != d.samples()) throw DataError("extra column " + name + " has wrong length");
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  const Eigen::Index n = d.states();
  out << "t";
  for (Eigen::Index j = 0; j < n; ++j) out << ",x" << j + 1;
  out << ",u,y";
  if (d.Xdot) {
    for (Eigen::Index j = 0; j < n; ++j) out << ",xdot" << j + 1;
  }
  for (const auto& c : extra) out << "," << c.first;
  out << "\n";

  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (Eigen::Index i = 0; i < d.samples(); ++i) {
    put(d.times(i));
    for (Eigen::Index j = 0; j < n; ++j) out << ",", put(d.X(i, j));
    out << ",", put(d.U(i));
    out << ",", put(d.Y(i));
    if (d.Xdot) {
      for (Eigen::Index j = 0; j < n; ++j) out << ",", put((*d.Xdot)(i, j));
    }
    for (const auto& c : extra) out << ",", put(c.second(i));
    out << "\n";
  }
  if (!out) throw DataError("write failure on " + path);
}

Dataset estimate_derivatives(const Dataset& d, bool overwrite) {
  const Eigen::Index m = d.samples();
  if (m < 3) throw DataError("estimate_derivatives requires m >= 3");
  d.validate();
  if (d.Xdot && !overwrite) return d;

  const double h = d.dt();
  Dataset out = d;
  Eigen::MatrixXd D(m, d.states());
  D.row(0) = (-3.0 * d.X.row(0) + 4.0 * d.X.row(1) - d.X.row(2)) / (2.0 * h);
  for (Eigen::Index i = 1; i + 1 < m; ++i) D.row(i) = (d.X.row(i + 1) - d.X.row(i - 1)) / (2.0 * h);
  D.row(m - 1) = (3.0 * d.X.row(m - 1) - 4.0 * d.X.row(m - 2) + d.X.row(m - 3)) / (2.0 * h);
  out.Xdot = std::move(D);
  return out;
}

}  // namespace sparsefl
