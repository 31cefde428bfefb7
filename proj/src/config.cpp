#include "twopart/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "twopart/errors.hpp"

namespace twopart {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  if (problems.size() == 1) return problems.front();
  std::string out = std::to_string(problems.size()) + " problems";
  for (const auto& p : problems) out += "\n  " + p;
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Nested bracket lists: "[1, 2]" or "[[1, 2], [3, 4]]".
struct Nested {
  bool leaf = true;
  double value = 0.0;
  std::vector<Nested> items;
};

Nested parse_nested(std::string_view text, std::size_t& pos) {
  while (pos < text.size() && text[pos] == ' ') ++pos;
  Nested node;
  if (pos < text.size() && text[pos] == '[') {
    node.leaf = false;
    ++pos;
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos < text.size() && text[pos] == ']') {
      ++pos;
      return node;
    }
    for (;;) {
      node.items.push_back(parse_nested(text, pos));
      while (pos < text.size() && text[pos] == ' ') ++pos;
      if (pos >= text.size()) throw std::invalid_argument("unterminated list");
      if (text[pos] == ']') {
        ++pos;
        return node;
      }
      if (text[pos] != ',') throw std::invalid_argument("expected ',' or ']'");
      ++pos;
    }
  }
  const auto end = text.find_first_of(",]", pos);
  const auto token = trim(text.substr(pos, end == std::string_view::npos ? end : end - pos));
  node.value = parse_real(token);
  pos = end == std::string_view::npos ? text.size() : end;
  return node;
}

Nested parse_list(const std::string& text) {
  std::size_t pos = 0;
  Nested n = parse_nested(text, pos);
  if (trim(std::string_view(text).substr(pos)).size() != 0) {
    throw std::invalid_argument("trailing characters after list");
  }
  return n;
}

Vector to_vector(const Nested& n) {
  if (n.leaf) throw std::invalid_argument("expected a [..] vector");
  Vector v(static_cast<Eigen::Index>(n.items.size()));
  for (std::size_t i = 0; i < n.items.size(); ++i) {
    if (!n.items[i].leaf) throw std::invalid_argument("expected scalars inside the vector");
    v[static_cast<Eigen::Index>(i)] = n.items[i].value;
  }
  return v;
}

Matrix to_matrix(const Nested& n) {
  if (n.leaf) throw std::invalid_argument("expected a [[..], ..] matrix");
  const auto rows = static_cast<Eigen::Index>(n.items.size());
  if (rows == 0) return Matrix(0, 0);
  const Vector first = to_vector(n.items[0]);
  Matrix m(rows, first.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vector row = to_vector(n.items[static_cast<std::size_t>(i)]);
    if (row.size() != m.cols()) throw std::invalid_argument("ragged matrix rows");
    m.row(i) = row.transpose();
  }
  return m;
}

std::string format_vector(const Vector& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_real(v[i]);
  }
  return out + "]";
}

std::string format_matrix(const Matrix& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += ", ";
    out += format_vector(m.row(i).transpose());
  }
  return out + "]";
}

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false");
}

template <typename Int>
Int parse_integer(const std::string& s) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected an integer");
  }
  return value;
}

const char* convention_name(Psi2Convention c) {
  return c == Psi2Convention::kInverseHalfCovariance ? "inverse_half_covariance"
                                                     : "half_covariance";
}

using Setter = std::function<void(Config&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"a1_0", [](Config& c, const std::string& v) { c.part1.a1_0 = parse_real(v); }},
      {"b1_0", [](Config& c, const std::string& v) { c.part1.b1_0 = parse_real(v); }},
      {"beta1_0",
       [](Config& c, const std::string& v) { c.part1.beta1_0 = to_vector(parse_list(v)); }},
      {"S_beta1_0",
       [](Config& c, const std::string& v) { c.part1.S_beta1_0 = to_matrix(parse_list(v)); }},
      {"mh_step_scale",
       [](Config& c, const std::string& v) { c.part1.mh_step_scale = parse_real(v); }},
      {"mh_adapt", [](Config& c, const std::string& v) { c.part1.mh_adapt = parse_bool(v); }},
      {"a2_0", [](Config& c, const std::string& v) { c.part2.a2_0 = parse_real(v); }},
      {"b2_0", [](Config& c, const std::string& v) { c.part2.b2_0 = parse_real(v); }},
      {"nu1", [](Config& c, const std::string& v) { c.part2.nu1 = parse_real(v); }},
      {"nu2", [](Config& c, const std::string& v) { c.part2.nu2 = parse_real(v); }},
      {"m2", [](Config& c, const std::string& v) { c.part2.m2 = to_vector(parse_list(v)); }},
      {"S2", [](Config& c, const std::string& v) { c.part2.S2 = to_matrix(parse_list(v)); }},
      {"tau1", [](Config& c, const std::string& v) { c.part2.tau1 = parse_real(v); }},
      {"tau2", [](Config& c, const std::string& v) { c.part2.tau2 = parse_real(v); }},
      {"Psi2", [](Config& c, const std::string& v) { c.part2.Psi2 = to_matrix(parse_list(v)); }},
      {"truncation_L",
       [](Config& c, const std::string& v) { c.part2.truncation_L = parse_integer<int>(v); }},
      {"log_z", [](Config& c, const std::string& v) { c.part2.log_z = parse_bool(v); }},
      {"psi2_convention",
       [](Config& c, const std::string& v) {
         if (v == "inverse_half_covariance") {
           c.psi2_convention = Psi2Convention::kInverseHalfCovariance;
         } else if (v == "half_covariance") {
           c.psi2_convention = Psi2Convention::kHalfCovariance;
         } else {
           throw std::invalid_argument("expected inverse_half_covariance or half_covariance");
         }
       }},
      {"burn_in",
       [](Config& c, const std::string& v) {
         c.schedule.burn_in = parse_integer<std::int64_t>(v);
       }},
      {"keep",
       [](Config& c, const std::string& v) { c.schedule.keep = parse_integer<std::int64_t>(v); }},
      {"thin",
       [](Config& c, const std::string& v) { c.schedule.thin = parse_integer<std::int64_t>(v); }},
      {"chains",
       [](Config& c, const std::string& v) { c.schedule.chains = parse_integer<int>(v); }},
      {"seed",
       [](Config& c, const std::string& v) {
         c.schedule.seed = parse_integer<std::uint64_t>(v);
       }},
      {"dump_state", [](Config& c, const std::string& v) { c.dump_state = parse_bool(v); }},
  };
  return table;
}

void assign(Config& config, const std::string& key, const std::string& value, int line) {
  const auto& table = setters();
  const auto it = table.find(key);
  const std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
  if (it == table.end()) throw ConfigError(where + "unknown key '" + key + "'");
  try {
    it->second(config, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + key + ": " + e.what());
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

DatasetSummary summarize_columns(const Matrix& rows, std::vector<std::string> columns) {
  DatasetSummary s;
  s.m = static_cast<int>(rows.rows());
  s.columns = std::move(columns);
  if (s.m < 2) {
    throw ConfigError("need at least 2 positive-response units to form a sample covariance (got " +
                      std::to_string(s.m) + ")");
  }
  s.mean = rows.colwise().mean().transpose();
  const Matrix centred = rows.rowwise() - s.mean.transpose();
  s.covariance = centred.transpose() * centred / static_cast<double>(s.m - 1);
  return s;
}

Config default_config(const DatasetSummary& summary, int r, Psi2Convention convention) {
  const Matrix& S = summary.covariance;
  const auto k = S.rows();
  auto name = [&](Eigen::Index j) {
    return j < static_cast<Eigen::Index>(summary.columns.size())
               ? summary.columns[static_cast<std::size_t>(j)]
               : "column " + std::to_string(j);
  };

  // Locate the first column that adds no variance beyond the preceding ones.
  std::vector<std::string> problems;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(S(j, j) > 0.0)) problems.push_back("sample covariance: column '" + name(j) +
                                             "' has zero variance");
  }
  if (problems.empty()) {
    for (Eigen::Index j = 1; j < k; ++j) {
      const Matrix lead = S.topLeftCorner(j, j);
      const Vector cross = S.block(0, j, j, 1);
      const double residual = S(j, j) - cross.dot(lead.ldlt().solve(cross));
      if (!(residual > 1e-12 * S(j, j))) {
        std::string others;
        for (Eigen::Index q = 0; q < j; ++q) others += (q ? ", '" : "'") + name(q) + "'";
        problems.push_back("sample covariance is singular: column '" + name(j) +
                           "' is collinear with " + others);
        break;
      }
    }
  }
  if (!problems.empty()) throw ConfigError(problems);

  Config c;
  c.psi2_convention = convention;
  c.part1.beta1_0 = Vector::Zero(r);
  c.part1.S_beta1_0 = 10000.0 * Matrix::Identity(r, r);
  c.part2.m2 = summary.mean;
  c.part2.S2 = 0.5 * S;
  c.part2.Psi2 = convention == Psi2Convention::kInverseHalfCovariance
                     ? spd_inverse(c.part2.S2, "0.5 * sample covariance")
                     : Matrix(0.5 * S);
  return c;
}

std::vector<std::string> validate(const Config& c, bool require_gelman_rubin) {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };
  const auto& p1 = c.part1;
  const auto& p2 = c.part2;
  const auto r = p1.beta1_0.size();
  const auto k = p2.m2.size();

  check(p1.a1_0 > 0.0, "a1_0: must be > 0 (got " + format_real(p1.a1_0) + ")");
  check(p1.b1_0 > 0.0, "b1_0: must be > 0 (got " + format_real(p1.b1_0) + ")");
  check(r >= 1, "beta1_0: must have length r >= 1");
  check(p1.S_beta1_0.rows() == r && p1.S_beta1_0.cols() == r,
        "S_beta1_0: must be r x r with r = " + std::to_string(r));
  check(p1.S_beta1_0.rows() != r || is_spd(p1.S_beta1_0),
        "S_beta1_0: must be symmetric positive definite");
  check(p1.mh_step_scale > 0.0,
        "mh_step_scale: must be > 0 (got " + format_real(p1.mh_step_scale) + ")");

  check(p2.a2_0 > 0.0, "a2_0: must be > 0 (got " + format_real(p2.a2_0) + ")");
  check(p2.b2_0 > 0.0, "b2_0: must be > 0 (got " + format_real(p2.b2_0) + ")");
  check(k >= 2, "m2: must have length k >= 2 (response plus at least one covariate)");
  const std::string km1 = std::to_string(k - 1);
  check(p2.nu1 > static_cast<double>(k) - 1.0,
        "nu1: must exceed k-1 = " + km1 + " (got " + format_real(p2.nu1) + ")");
  check(p2.nu2 > static_cast<double>(k) - 1.0,
        "nu2: must exceed k-1 = " + km1 + " (got " + format_real(p2.nu2) + ")");
  check(p2.S2.rows() == k && p2.S2.cols() == k && is_spd(p2.S2),
        "S2: must be a k x k symmetric positive definite matrix");
  check(p2.Psi2.rows() == k && p2.Psi2.cols() == k && is_spd(p2.Psi2),
        "Psi2: must be a k x k symmetric positive definite matrix");
  check(p2.tau1 > 0.0, "tau1: must be > 0 (got " + format_real(p2.tau1) + ")");
  check(p2.tau2 > 0.0, "tau2: must be > 0 (got " + format_real(p2.tau2) + ")");
  check(p2.truncation_L >= 2,
        "truncation_L: must be >= 2 (got " + std::to_string(p2.truncation_L) + ")");

  const auto& s = c.schedule;
  check(s.burn_in >= 0, "burn_in: must be >= 0");
  check(s.keep >= 1, "keep: must be >= 1");
  check(s.thin >= 1, "thin: must be >= 1");
  check(s.chains >= 1, "chains: must be >= 1");
  if (require_gelman_rubin) {
    check(s.chains >= 2, "chains: must be >= 2 when Gelman-Rubin diagnostics are requested");
  }
  return bad;
}

void require_valid(const Config& config, bool require_gelman_rubin) {
  auto problems = validate(config, require_gelman_rubin);
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::string to_text(const Config& c) {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "# twopart configuration\n";
  out << "a1_0 = " << format_real(c.part1.a1_0) << '\n';
  out << "b1_0 = " << format_real(c.part1.b1_0) << '\n';
  out << "beta1_0 = " << format_vector(c.part1.beta1_0) << '\n';
  out << "S_beta1_0 = " << format_matrix(c.part1.S_beta1_0) << '\n';
  out << "mh_step_scale = " << format_real(c.part1.mh_step_scale) << '\n';
  out << "mh_adapt = " << b(c.part1.mh_adapt) << '\n';
  out << "a2_0 = " << format_real(c.part2.a2_0) << '\n';
  out << "b2_0 = " << format_real(c.part2.b2_0) << '\n';
  out << "nu1 = " << format_real(c.part2.nu1) << '\n';
  out << "nu2 = " << format_real(c.part2.nu2) << '\n';
  out << "m2 = " << format_vector(c.part2.m2) << '\n';
  out << "S2 = " << format_matrix(c.part2.S2) << '\n';
  out << "tau1 = " << format_real(c.part2.tau1) << '\n';
  out << "tau2 = " << format_real(c.part2.tau2) << '\n';
  out << "Psi2 = " << format_matrix(c.part2.Psi2) << '\n';
  out << "truncation_L = " << c.part2.truncation_L << '\n';
  out << "log_z = " << b(c.part2.log_z) << '\n';
  out << "psi2_convention = " << convention_name(c.psi2_convention) << '\n';
  out << "burn_in = " << c.schedule.burn_in << '\n';
  out << "keep = " << c.schedule.keep << '\n';
  out << "thin = " << c.schedule.thin << '\n';
  out << "chains = " << c.schedule.chains << '\n';
  out << "seed = " << c.schedule.seed << '\n';
  out << "dump_state = " << b(c.dump_state) << '\n';
  return out.str();
}

Config parse_config(const std::string& text, const Config& base) {
  Config c = base;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    assign(c, trim(body.substr(0, eq)), trim(body.substr(eq + 1)), lineno);
  }
  return c;
}

void apply_override(Config& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  assign(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), 0);
}

std::string config_hash(const Config& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace twopart
