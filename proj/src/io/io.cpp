#include "ebib/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ebib/errors.hpp"

namespace ebib::io {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t\r");
    const auto e = cur.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": not a number: '" + s + "'");
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return in;
}

}  // namespace

void ResultTable::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw DomainError("ResultTable: row width differs from header");
  rows.push_back(std::move(row));
}

std::size_t ResultTable::column(const std::string& c) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == c) return i;
  throw DomainError("ResultTable: no column " + c);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string ResultTable::to_csv() const {
  std::ostringstream os;
  for (const auto& h : header) os << "# " << h << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
    os << '\n';
  }
  return os.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Dataset read_dataset_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  const auto head = split(line);
  int ycol = -1;
  std::vector<std::pair<int, int>> xcols;  // (index in design, column)
  for (int i = 0; i < static_cast<int>(head.size()); ++i) {
    if (head[i] == "y") {
      ycol = i;
    } else if (head[i].size() > 1 && head[i][0] == 'x') {
      const int j = static_cast<int>(parse_double(head[i].substr(1), path + " header"));
      xcols.emplace_back(j - 1, i);
    } else {
      throw ValidationError(path + ": unexpected column '" + head[i] + "'");
    }
  }
  if (ycol < 0) throw ValidationError(path + ": missing column y");
  const int d = static_cast<int>(xcols.size());
  for (auto [j, _] : xcols)
    if (j < 0 || j >= d) throw ValidationError(path + ": design columns must be x1..xd");
  std::vector<double> ys;
  std::vector<std::vector<double>> xs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line);
    if (f.size() != head.size()) throw ValidationError(path + ":" + std::to_string(lineno) + ": wrong field count");
    const std::string where = path + ":" + std::to_string(lineno);
    ys.push_back(parse_double(f[ycol], where));
    std::vector<double> row(d);
    for (auto [j, c] : xcols) row[j] = parse_double(f[c], where);
    xs.push_back(std::move(row));
  }
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), ys.size());
  if (d == 0) return Dataset::observations(y);
  Eigen::MatrixXd X(ys.size(), d);
  for (std::size_t i = 0; i < ys.size(); ++i)
    for (int j = 0; j < d; ++j) X(i, j) = xs[i][j];
  return Dataset::regression(X, y);
}

Eigen::MatrixXi read_count_matrix_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::vector<std::vector<int>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<int> r;
    for (const auto& f : split(line)) {
      const double v = parse_double(f, path);
      if (v < 0 || v != std::floor(v)) throw ValidationError(path + ": counts must be nonnegative integers");
      r.push_back(static_cast<int>(v));
    }
    rows.push_back(std::move(r));
  }
  const auto K = rows.size();
  Eigen::MatrixXi M(K, K);
  for (std::size_t i = 0; i < K; ++i) {
    if (rows[i].size() != K) throw ValidationError(path + ": count matrix must be square");
    for (std::size_t j = 0; j < K; ++j) M(i, j) = rows[i][j];
  }
  return M;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
  if (!out) throw Error("write failed for " + path);
}

void write_chain_csv(const ChainOutput& chain, const std::string& path) {
  ResultTable t;
  t.columns = chain.names;
  t.header = {"seed: " + std::to_string(chain.seed)};
  for (Eigen::Index i = 0; i < chain.draws.rows(); ++i) {
    std::vector<double> r(chain.draws.cols());
    for (Eigen::Index j = 0; j < chain.draws.cols(); ++j) r[j] = chain.draws(i, j);
    t.add_row(std::move(r));
  }
  write_text(path, t.to_csv());
}

}  // namespace ebib::io
