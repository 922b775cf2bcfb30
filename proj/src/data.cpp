#include "gcmm/data.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "gcmm/errors.hpp"

namespace gcmm {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

double parse_field(const std::string& field, std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw DataError("could not parse number at row " + std::to_string(row) + " col " +
                    std::to_string(col));
  }
  if (!std::isfinite(value)) {
    throw DataError("non-finite at row " + std::to_string(row) + " col " +
                    std::to_string(col));
  }
  return value;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  // Trailing blank lines are tolerated; interior blanks are not data.
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

void SyncDataset::validate() const {
  if (n() < 2) throw DataError("N ≥ 2 required");
  if (d() < 1) throw DataError("at least one dimension required");
  if (dimension_names.size() != static_cast<std::size_t>(d())) {
    throw DataError("dimension names must match the column count");
  }
  for (Eigen::Index r = 0; r < n(); ++r) {
    for (Eigen::Index c = 0; c < d(); ++c) {
      if (!std::isfinite(values(r, c))) {
        throw DataError("non-finite at row " + std::to_string(r + 1) + " col " +
                        std::to_string(c + 1));
      }
    }
  }
}

void UnsyncDataset::validate(Eigen::Index d) const {
  if (per_dimension.size() != static_cast<std::size_t>(d)) {
    throw DataError("unsynchronized pools must cover every dimension");
  }
  for (const auto& pool : per_dimension) {
    for (double v : pool) {
      if (!std::isfinite(v)) throw DataError("unsynchronized values must be finite");
    }
  }
}

SyncDataset load_sync_csv(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw DataError("empty file: " + path);

  SyncDataset data;
  data.dimension_names = split_fields(lines[0]);
  const std::size_t d = data.dimension_names.size();
  for (const auto& name : data.dimension_names) {
    if (name.empty()) throw DataError("header has an empty dimension name");
  }

  const std::size_t n = lines.size() - 1;
  if (n < 2) throw DataError("N ≥ 2 required");

  data.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < n; ++r) {
    auto fields = split_fields(lines[r + 1]);
    if (fields.size() != d) {
      throw DataError("expected " + std::to_string(d) + " fields at row " +
                      std::to_string(r + 1) + ", got " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < d; ++c) {
      data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_field(fields[c], r + 1, c + 1);
    }
  }
  data.validate();
  return data;
}

std::vector<double> load_unsync_csv(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw DataError("empty file: " + path);
  if (split_fields(lines[0]).size() != 1) {
    throw DataError("unsynchronized file must have a single column: " + path);
  }
  std::vector<double> out;
  out.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = split_fields(lines[r]);
    if (fields.size() != 1) {
      throw DataError("expected 1 field at row " + std::to_string(r) + " in " + path);
    }
    out.push_back(parse_field(fields[0], r, 1));
  }
  return out;
}

UnsyncDataset load_unsync_dir(const std::string& dir,
                              const std::vector<std::string>& dimension_names) {
  UnsyncDataset out;
  out.per_dimension.resize(dimension_names.size());
  for (std::size_t i = 0; i < dimension_names.size(); ++i) {
    std::filesystem::path p = std::filesystem::path(dir) / (dimension_names[i] + ".csv");
    if (std::filesystem::exists(p)) {
      out.per_dimension[i] = load_unsync_csv(p.string());
    }
  }
  return out;
}

void save_sync_csv(const SyncDataset& data, const std::string& path) {
  std::ostringstream body;
  for (std::size_t i = 0; i < data.dimension_names.size(); ++i) {
    if (i) body << ',';
    body << data.dimension_names[i];
  }
  body << '\n';
  for (Eigen::Index r = 0; r < data.n(); ++r) {
    for (Eigen::Index c = 0; c < data.d(); ++c) {
      if (c) body << ',';
      body << format_double(data.values(r, c));
    }
    body << '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << body.str();
}

}  // namespace gcmm
