#include "mfp/data/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace mfp::data {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

} // namespace

MultivariateSeries parse_csv(const std::string& text, std::string merchant_id) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kSeriesCsvHeader) {
    throw DataError("row 1: expected header '" + std::string(kSeriesCsvHeader) + "'");
  }
  const auto& names = merchant_features();
  const std::size_t d = names.size();
  std::vector<double> values;
  HourStamp first = 0;
  std::size_t n = 0;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_fields(body);
    if (fields.size() != d + 1) {
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(d + 1) +
                      " fields, got " + std::to_string(fields.size()));
    }
    HourStamp ts = 0;
    try {
      ts = parse_timestamp(trim(fields[0]));
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(row) + ": " + e.what());
    }
    if (n == 0) {
      first = ts;
    } else {
      const HourStamp expected = first + static_cast<HourStamp>(n);
      if (ts == expected - 1) {
        throw DataError("row " + std::to_string(row) + ": duplicate timestamp " +
                        format_timestamp(ts));
      }
      if (ts < expected) {
        throw DataError("row " + std::to_string(row) + ": timestamp " + format_timestamp(ts) +
                        " out of order");
      }
      if (ts > expected) {
        throw DataError("row " + std::to_string(row) + ": missing hour(s) before " +
                        format_timestamp(ts) + " (expected " + format_timestamp(expected) + ")");
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      const auto f = trim(fields[j + 1]);
      double v = 0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
        throw DataError("row " + std::to_string(row) + ": non-numeric " + names[j] + " '" +
                        std::string(f) + "'");
      }
      values.push_back(v);
    }
    ++n;
  }

  MultivariateSeries s;
  s.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      s.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = values[t * d + j];
    }
  }
  s.feature_names = names;
  s.start_hour = first;
  s.merchant_id = std::move(merchant_id);
  try {
    s.validate();
  } catch (const DataError& e) {
    throw DataError(std::string(e.what()) + " (data rows start at file row 2)");
  }
  return s;
}

MultivariateSeries load_csv(const std::filesystem::path& path) {
  return parse_csv(read_file(path), path.stem().string());
}

std::string format_csv(const MultivariateSeries& series) {
  if (series.feature_names != merchant_features()) {
    throw DataError("only merchant series (" + std::string(kSeriesCsvHeader) +
                    ") can be written as CSV");
  }
  std::string out = std::string(kSeriesCsvHeader) + "\n";
  char buf[64];
  for (std::size_t t = 0; t < series.length(); ++t) {
    out += format_timestamp(series.start_hour + static_cast<HourStamp>(t));
    for (std::size_t j = 0; j < series.features(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g",
                    series.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_csv(const MultivariateSeries& series, const std::filesystem::path& path) {
  write_file_atomic(path, format_csv(series));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " +
                             ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace mfp::data
