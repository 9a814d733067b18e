#include "kmargin/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace kmargin {

namespace {

[[noreturn]] void fail_at(const std::string& path, int line, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& token, const std::string& path, int line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE) {
    fail_at(path, line, "expected a number, got '" + token + "'");
  }
  return v;
}

bool is_numeric(const std::string& token) {
  char* end = nullptr;
  std::strtod(token.c_str(), &end);
  return end != token.c_str() && *end == '\0';
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int map_label(double raw, const std::string& path, int line) {
  if (raw == 1.0) return 1;
  if (raw == -1.0 || raw == 0.0) return -1;
  fail_at(path, line, "label must be one of {0, 1, -1, +1}");
}

std::ifstream open_or_fail(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

LabeledDataset ingest_csv(const std::string& path) {
  std::ifstream in = open_or_fail(path);
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) fail_at(path, 1, "empty file");
  ++lineno;
  std::vector<std::string> header = split(trim(line), ',');
  if (header.empty() || trim(header.back()) != "label") {
    fail_at(path, lineno, "csv header must end with a `label` column");
  }
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) fail_at(path, lineno, "csv needs at least one feature column");

  std::vector<Vector> points;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::vector<std::string> fields = split(t, ',');
    if (static_cast<int>(fields.size()) != d + 1) {
      fail_at(path, lineno, "expected " + std::to_string(d + 1) + " fields, got " +
                                std::to_string(fields.size()));
    }
    Vector x(d);
    for (int j = 0; j < d; ++j) x[j] = parse_double(trim(fields[j]), path, lineno);
    labels.push_back(map_label(parse_double(trim(fields[d]), path, lineno), path, lineno));
    points.push_back(std::move(x));
  }
  if (points.empty()) fail_at(path, lineno + 1, "no data rows");

  LabeledDataset out;
  out.points.resize(static_cast<int>(points.size()), d);
  out.labels.resize(static_cast<int>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.points.row(static_cast<int>(i)) = points[i].transpose();
    out.labels[static_cast<int>(i)] = labels[i];
  }
  return out;
}

LabeledDataset ingest_svmlight(const std::string& path) {
  std::ifstream in = open_or_fail(path);
  std::string line;
  int lineno = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::vector<int> labels;
  int max_index = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;  // blank line
    labels.push_back(map_label(parse_double(token, path, lineno), path, lineno));
    std::vector<std::pair<int, double>> row;
    while (ls >> token) {
      const std::size_t colon = token.find(':');
      if (colon == std::string::npos) {
        fail_at(path, lineno, "expected idx:val, got '" + token + "'");
      }
      const std::string idx_s = token.substr(0, colon);
      char* end = nullptr;
      const long idx = std::strtol(idx_s.c_str(), &end, 10);
      if (end == idx_s.c_str() || *end != '\0' || idx < 1) {
        fail_at(path, lineno, "feature indices are 1-based integers, got '" + idx_s + "'");
      }
      row.emplace_back(static_cast<int>(idx),
                       parse_double(token.substr(colon + 1), path, lineno));
      max_index = std::max(max_index, static_cast<int>(idx));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail_at(path, lineno + 1, "no data rows");
  if (max_index == 0) fail_at(path, 1, "no features present in file");

  LabeledDataset out;
  out.points = Matrix::Zero(static_cast<int>(rows.size()), max_index);
  out.labels.resize(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.labels[static_cast<int>(i)] = labels[i];
    for (const auto& [idx, val] : rows[i]) {
      out.points(static_cast<int>(i), idx - 1) = val;
    }
  }
  return out;
}

// Skips comment lines; returns false at end of stream.
bool next_content_line(std::istream& in, std::string& line, int& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (!t.empty() && t[0] != '#') {
      line = t;
      return true;
    }
  }
  return false;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Keep the shortest representation that still round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

void write_generated_at(std::ostream& os) {
  std::time_t now = std::time(nullptr);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  os << "# generated-at " << buf << "\n";
}

LabeledDataset ingest(const std::string& path, const std::string& format) {
  if (format == "csv") return ingest_csv(path);
  if (format == "svmlight") return ingest_svmlight(path);
  throw std::invalid_argument("unknown data format: " + format);
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in = open_or_fail(path);
  std::string line;
  int lineno = 0;
  std::vector<Vector> rows;
  int width = -1;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> fields = split(t, ',');
    if (first_content) {
      first_content = false;
      bool all_numeric = true;
      for (const auto& f : fields) all_numeric = all_numeric && is_numeric(trim(f));
      if (!all_numeric) continue;  // header row
    }
    if (width < 0) width = static_cast<int>(fields.size());
    if (static_cast<int>(fields.size()) != width) {
      fail_at(path, lineno, "ragged row: expected " + std::to_string(width) + " fields");
    }
    Vector x(width);
    for (int j = 0; j < width; ++j) x[j] = parse_double(trim(fields[j]), path, lineno);
    rows.push_back(std::move(x));
  }
  if (rows.empty()) fail_at(path, lineno + 1, "no data rows");
  Matrix out(static_cast<int>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<int>(i)) = rows[i].transpose();
  }
  return out;
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_generated_at(out);
  out << "kmargin-model " << model.format_version << "\n";
  out << "kernel " << model.kernel.spec() << "\n";
  out << "loss " << loss_name(model.loss) << "\n";
  out << "lambda " << format_double(model.lambda) << "\n";
  const int n = static_cast<int>(model.points.rows());
  const int d = static_cast<int>(model.points.cols());
  out << "n " << n << "\n";
  out << "d " << d << "\n";
  for (int i = 0; i < n; ++i) {
    out << "point";
    for (int j = 0; j < d; ++j) out << ' ' << format_double(model.points(i, j));
    out << "\n";
  }
  for (int i = 0; i < n; ++i) {
    out << "coef " << format_double(model.coefficients[i]) << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in = open_or_fail(path);
  std::string line;
  int lineno = 0;

  auto expect_field = [&](const std::string& key) -> std::string {
    if (!next_content_line(in, line, lineno)) {
      fail_at(path, lineno + 1, "unexpected end of model file, wanted `" + key + "`");
    }
    if (line.rfind(key + " ", 0) != 0) {
      fail_at(path, lineno, "expected `" + key + " ...`, got '" + line + "'");
    }
    return trim(line.substr(key.size() + 1));
  };

  const std::string version = expect_field("kmargin-model");
  if (version != std::to_string(kModelFormatVersion)) {
    fail_at(path, lineno, "unsupported model format version " + version);
  }
  Model model;
  model.format_version = kModelFormatVersion;
  model.kernel = Kernel::parse(expect_field("kernel"));
  model.loss = parse_loss(expect_field("loss"));
  model.lambda = parse_double(expect_field("lambda"), path, lineno);
  const int n = static_cast<int>(parse_double(expect_field("n"), path, lineno));
  const int d = static_cast<int>(parse_double(expect_field("d"), path, lineno));
  if (n < 1 || d < 1) fail_at(path, lineno, "model needs n >= 1 and d >= 1");

  model.points.resize(n, d);
  for (int i = 0; i < n; ++i) {
    std::istringstream ps(expect_field("point"));
    std::string token;
    for (int j = 0; j < d; ++j) {
      if (!(ps >> token)) fail_at(path, lineno, "point row has too few values");
      model.points(i, j) = parse_double(token, path, lineno);
    }
    if (ps >> token) fail_at(path, lineno, "point row has too many values");
  }
  model.coefficients.resize(n);
  for (int i = 0; i < n; ++i) {
    model.coefficients[i] = parse_double(expect_field("coef"), path, lineno);
  }
  return model;
}

void save_discrete_joint(const DiscreteJoint& d, const std::string& path) {
  d.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_generated_at(out);
  out << d.atoms() << "\n";
  for (int j = 0; j < d.atoms(); ++j) {
    for (int c = 0; c < d.dim(); ++c) out << format_double(d.support(j, c)) << ' ';
    out << format_double(d.p[j]) << ' ' << format_double(d.eta[j]) << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

DiscreteJoint load_discrete_joint(const std::string& path) {
  std::ifstream in = open_or_fail(path);
  std::string line;
  int lineno = 0;
  if (!next_content_line(in, line, lineno)) fail_at(path, 1, "empty file");
  const int m = static_cast<int>(parse_double(line, path, lineno));
  if (m < 1) fail_at(path, lineno, "atom count must be >= 1");

  std::vector<std::vector<double>> rows;
  for (int j = 0; j < m; ++j) {
    if (!next_content_line(in, line, lineno)) {
      fail_at(path, lineno + 1, "expected " + std::to_string(m) + " atom rows");
    }
    std::istringstream rs(line);
    std::vector<double> values;
    std::string token;
    while (rs >> token) values.push_back(parse_double(token, path, lineno));
    if (values.size() < 3) fail_at(path, lineno, "atom row needs x-coords, p, eta");
    if (!rows.empty() && values.size() != rows.front().size()) {
      fail_at(path, lineno, "atom rows have inconsistent widths");
    }
    rows.push_back(std::move(values));
  }

  const int d = static_cast<int>(rows.front().size()) - 2;
  DiscreteJoint out;
  out.support.resize(m, d);
  out.p.resize(m);
  out.eta.resize(m);
  for (int j = 0; j < m; ++j) {
    for (int c = 0; c < d; ++c) out.support(j, c) = rows[j][c];
    out.p[j] = rows[j][d];
    out.eta[j] = rows[j][d + 1];
  }
  out.validate();
  return out;
}

}  // namespace kmargin
