#include "twopart/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "twopart/errors.hpp"

namespace twopart {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

std::vector<int> SemicontinuousDataset::delta() const {
  std::vector<int> d(static_cast<std::size_t>(n()));
  for (int i = 0; i < n(); ++i) d[static_cast<std::size_t>(i)] = y[i] > 0.0 ? 1 : 0;
  return d;
}

int SemicontinuousDataset::positives() const {
  int m = 0;
  for (int i = 0; i < n(); ++i) m += y[i] > 0.0 ? 1 : 0;
  return m;
}

Matrix SemicontinuousDataset::positive_rows(bool log_z) const {
  Matrix D(positives(), 1 + p());
  int j = 0;
  for (int i = 0; i < n(); ++i) {
    if (!(y[i] > 0.0)) continue;
    D(j, 0) = log_z ? std::log(y[i]) : y[i];
    D.row(j).tail(p()) = X.row(i);
    ++j;
  }
  return D;
}

SemicontinuousDataset SemicontinuousDataset::subset(std::span<const int> rows) const {
  SemicontinuousDataset s;
  s.has_y = has_y;
  s.w_names = w_names;
  s.x_names = x_names;
  const auto m = static_cast<Eigen::Index>(rows.size());
  s.y.resize(m);
  s.W.resize(m, W.cols());
  s.X.resize(m, X.cols());
  if (areas) s.areas.emplace();
  if (in_sample) s.in_sample.emplace();
  for (Eigen::Index j = 0; j < m; ++j) {
    const int i = rows[static_cast<std::size_t>(j)];
    s.ids.push_back(ids[static_cast<std::size_t>(i)]);
    s.y[j] = y[i];
    s.W.row(j) = W.row(i);
    s.X.row(j) = X.row(i);
    if (areas) s.areas->push_back((*areas)[static_cast<std::size_t>(i)]);
    if (in_sample) s.in_sample->push_back((*in_sample)[static_cast<std::size_t>(i)]);
  }
  return s;
}

std::string SemicontinuousDataset::summary_line() const {
  std::ostringstream out;
  out << "n=" << n();
  if (has_y) out << " positive=" << positives() << " zero=" << n() - positives();
  out << " r=" << r() << " p=" << p();
  return out.str();
}

SemicontinuousDataset parse_dataset(std::istream& in, const ColumnMapping& mapping) {
  std::string line;
  int lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) throw DataError("dataset: no header line");

  auto find = [&](const std::string& name) -> int {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return static_cast<int>(c);
    }
    return -1;
  };
  auto require = [&](const std::string& name) {
    const int c = find(name);
    if (c < 0) throw DataError("dataset: missing column '" + name + "'");
    return c;
  };
  auto covariates = [&](const std::vector<std::string>& explicit_names, const std::string& prefix) {
    std::vector<int> cols;
    if (!explicit_names.empty()) {
      for (const auto& nm : explicit_names) cols.push_back(require(nm));
    } else {
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (starts_with(header[c], prefix)) cols.push_back(static_cast<int>(c));
      }
    }
    return cols;
  };

  const int id_col = find(mapping.id);
  const int y_col = mapping.require_y ? require(mapping.y) : find(mapping.y);
  const auto w_cols = covariates(mapping.w_columns, mapping.w_prefix);
  const auto x_cols = covariates(mapping.x_columns, mapping.x_prefix);
  if (w_cols.empty()) throw DataError("dataset: no occurrence covariate columns");
  if (x_cols.empty()) throw DataError("dataset: no intensity covariate columns");
  const int area_col = find(mapping.area);
  const int split_col = find(mapping.in_sample);

  SemicontinuousDataset ds;
  ds.has_y = y_col >= 0;
  for (int c : w_cols) ds.w_names.push_back(header[static_cast<std::size_t>(c)]);
  for (int c : x_cols) ds.x_names.push_back(header[static_cast<std::size_t>(c)]);
  if (area_col >= 0) ds.areas.emplace();
  if (split_col >= 0) ds.in_sample.emplace();

  std::vector<double> ys, ws, xs;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError("dataset line " + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    auto cell = [&](int c) -> const std::string& {
      const auto& f = fields[static_cast<std::size_t>(c)];
      if (f.empty()) {
        throw DataError("dataset line " + std::to_string(lineno) + ", column '" +
                        header[static_cast<std::size_t>(c)] + "': missing value");
      }
      return f;
    };
    auto number = [&](int c) {
      const auto& f = cell(c);
      double v;
      try {
        v = parse_real(f);
      } catch (const std::invalid_argument&) {
        throw DataError("dataset line " + std::to_string(lineno) + ", column '" +
                        header[static_cast<std::size_t>(c)] + "': not a number ('" + f + "')");
      }
      if (!std::isfinite(v)) {
        throw DataError("dataset line " + std::to_string(lineno) + ", column '" +
                        header[static_cast<std::size_t>(c)] + "': not finite");
      }
      return v;
    };
    ds.ids.push_back(id_col >= 0 ? cell(id_col) : std::to_string(ds.ids.size()));
    if (y_col >= 0) {
      const double yv = number(y_col);
      if (yv < 0.0) {
        throw DataError("dataset line " + std::to_string(lineno) + ", column '" + mapping.y +
                        "': negative response " + fields[static_cast<std::size_t>(y_col)]);
      }
      ys.push_back(yv);
    } else {
      ys.push_back(0.0);
    }
    for (int c : w_cols) ws.push_back(number(c));
    for (int c : x_cols) xs.push_back(number(c));
    if (area_col >= 0) ds.areas->push_back(cell(area_col));
    if (split_col >= 0) {
      const double f = number(split_col);
      if (f != 0.0 && f != 1.0) {
        throw DataError("dataset line " + std::to_string(lineno) + ": in_sample must be 0 or 1");
      }
      ds.in_sample->push_back(static_cast<int>(f));
    }
  }
  if (ds.ids.empty()) throw DataError("dataset: no data rows");

  const auto n = static_cast<Eigen::Index>(ds.ids.size());
  ds.y = Eigen::Map<Vector>(ys.data(), n);
  ds.W = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      ws.data(), n, static_cast<Eigen::Index>(w_cols.size()));
  ds.X = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      xs.data(), n, static_cast<Eigen::Index>(x_cols.size()));
  return ds;
}

SemicontinuousDataset load_dataset(const std::filesystem::path& path, const ColumnMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, mapping);
}

void write_dataset(std::ostream& out, const SemicontinuousDataset& data) {
  out << "id";
  if (data.has_y) out << ",y";
  for (const auto& nm : data.w_names) out << ',' << nm;
  for (const auto& nm : data.x_names) out << ',' << nm;
  if (data.areas) out << ",area";
  if (data.in_sample) out << ",in_sample";
  out << '\n';
  for (int i = 0; i < data.n(); ++i) {
    out << data.ids[static_cast<std::size_t>(i)];
    if (data.has_y) out << ',' << format_real(data.y[i]);
    for (int j = 0; j < data.r(); ++j) out << ',' << format_real(data.W(i, j));
    for (int j = 0; j < data.p(); ++j) out << ',' << format_real(data.X(i, j));
    if (data.areas) out << ',' << (*data.areas)[static_cast<std::size_t>(i)];
    if (data.in_sample) out << ',' << (*data.in_sample)[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, const SemicontinuousDataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
  write_dataset(out, data);
}

DatasetSummary positive_summary(const SemicontinuousDataset& data, bool log_z) {
  std::vector<std::string> cols{log_z ? "log(y)" : "y"};
  cols.insert(cols.end(), data.x_names.begin(), data.x_names.end());
  return summarize_columns(data.positive_rows(log_z), std::move(cols));
}

}  // namespace twopart
