/*
 * Copyright 2026 The SES Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ses/dataset_io.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>
#include <utility>

#include "ses/error.h"

namespace ses {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary embedding format assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'E', 'S', 'M'};
constexpr std::uint32_t kVersion = 1;

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

// Splits on '\n', dropping a final empty line.
std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(',', start);
    if (end == std::string_view::npos) {
      fields.push_back(Trim(line.substr(start)));
      break;
    }
    fields.push_back(Trim(line.substr(start, end - start)));
    start = end + 1;
  }
  return fields;
}

double ParseDouble(std::string_view field, const std::filesystem::path& path,
                   std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  if (!field.empty() && field.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw Error(ErrorCode::kFormatError,
                path.string() + ":" + std::to_string(line_no) +
                    ": not a number: '" + std::string(field) + "'");
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kFormatError,
                path.string() + ":" + std::to_string(line_no) +
                    ": non-finite value");
  }
  return value;
}

long long ParseInteger(std::string_view field,
                       const std::filesystem::path& path, std::size_t line_no) {
  long long value = 0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw Error(ErrorCode::kFormatError,
                path.string() + ":" + std::to_string(line_no) +
                    ": not an integer: '" + std::string(field) + "'");
  }
  return value;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Parses an `index,value` file into values ordered by index.
std::vector<std::string_view> ReadIndexedColumn(
    const std::string& text, const std::filesystem::path& path,
    std::size_t expected_n) {
  const auto lines = SplitLines(text);
  if (lines.empty() || Trim(lines[0]) != "index,value") {
    throw Error(ErrorCode::kFormatError,
                path.string() + ": expected header 'index,value'");
  }
  std::vector<std::string_view> values(expected_n);
  std::vector<bool> seen(expected_n, false);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (Trim(lines[i]).empty()) continue;
    const auto fields = SplitFields(lines[i]);
    if (fields.size() != 2) {
      throw Error(ErrorCode::kFormatError,
                  path.string() + ":" + std::to_string(i + 1) +
                      ": expected 2 columns");
    }
    const long long index = ParseInteger(fields[0], path, i + 1);
    if (index < 0 || static_cast<std::size_t>(index) >= expected_n) {
      throw Error(ErrorCode::kFormatError,
                  path.string() + ":" + std::to_string(i + 1) + ": index " +
                      std::to_string(index) + " outside [0, " +
                      std::to_string(expected_n) + ")");
    }
    if (seen[index]) {
      throw Error(ErrorCode::kDuplicateIndex,
                  path.string() + ": index " + std::to_string(index) +
                      " appears more than once");
    }
    seen[index] = true;
    values[index] = fields[1];
  }
  for (std::size_t i = 0; i < expected_n; ++i) {
    if (!seen[i]) {
      throw Error(ErrorCode::kMissingIndex,
                  path.string() + ": index " + std::to_string(i) + " missing");
    }
  }
  return values;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t n, std::size_t d,
                                 std::vector<double> data)
    : n_(n), d_(d), data_(std::move(data)) {
  if (n_ == 0) throw Error(ErrorCode::kEmptyDataset, "no samples");
  if (d_ == 0) throw Error(ErrorCode::kFormatError, "zero feature dimension");
  if (data_.size() != n_ * d_) {
    throw Error(ErrorCode::kFormatError,
                "expected " + std::to_string(n_ * d_) + " values, got " +
                    std::to_string(data_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(ErrorCode::kFormatError,
                  "non-finite value at row " + std::to_string(i / d_) +
                      ", column " + std::to_string(i % d_));
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::Subset(std::span<const SampleId> rows) const {
  std::vector<double> out;
  out.reserve(rows.size() * d_);
  for (SampleId r : rows) {
    const auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return EmbeddingMatrix(rows.size(), d_, std::move(out));
}

LabelVector LabelVector::FromLabels(std::vector<int> labels) {
  LabelVector out;
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw Error(ErrorCode::kFormatError, "negative label");
    max_label = std::max(max_label, l);
  }
  out.labels = std::move(labels);
  out.num_classes = max_label + 1;
  return out;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  return std::move(ss).str();
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot create " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

EmbeddingFormat GuessEmbeddingFormat(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? EmbeddingFormat::kCsv
                                    : EmbeddingFormat::kBinary;
}

EmbeddingMatrix ReadEmbeddings(const std::filesystem::path& path,
                               EmbeddingFormat format) {
  const std::string bytes = ReadTextFile(path);
  if (format == EmbeddingFormat::kBinary) {
    constexpr std::size_t kHeader = 20;
    if (bytes.size() < kHeader || std::memcmp(bytes.data(), kMagic, 4) != 0) {
      throw Error(ErrorCode::kFormatError, path.string() + ": bad magic");
    }
    std::uint32_t version;
    std::uint64_t n;
    std::uint32_t d;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&n, bytes.data() + 8, 8);
    std::memcpy(&d, bytes.data() + 16, 4);
    if (version != kVersion) {
      throw Error(ErrorCode::kFormatError,
                  path.string() + ": unsupported version " +
                      std::to_string(version));
    }
    if (n == 0) throw Error(ErrorCode::kEmptyDataset, path.string());
    if (d == 0 || (bytes.size() - kHeader) / 4 / d != n ||
        (bytes.size() - kHeader) != n * d * 4) {
      throw Error(ErrorCode::kFormatError,
                  path.string() + ": payload size does not match header");
    }
    std::vector<double> data(n * d);
    const char* p = bytes.data() + kHeader;
    for (std::size_t i = 0; i < data.size(); ++i) {
      float f;
      std::memcpy(&f, p + 4 * i, 4);
      data[i] = f;
    }
    return EmbeddingMatrix(n, d, std::move(data));
  }

  std::vector<double> data;
  std::size_t n = 0;
  std::size_t d = 0;
  const auto lines = SplitLines(bytes);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (Trim(lines[i]).empty()) continue;
    const auto fields = SplitFields(lines[i]);
    if (d == 0) {
      d = fields.size();
    } else if (fields.size() != d) {
      throw Error(ErrorCode::kFormatError,
                  path.string() + ":" + std::to_string(i + 1) + ": expected " +
                      std::to_string(d) + " columns");
    }
    for (auto f : fields) data.push_back(ParseDouble(f, path, i + 1));
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, path.string());
  return EmbeddingMatrix(n, d, std::move(data));
}

void WriteEmbeddings(const EmbeddingMatrix& emb,
                     const std::filesystem::path& path,
                     EmbeddingFormat format) {
  std::string out;
  if (format == EmbeddingFormat::kBinary) {
    const std::uint64_t n = emb.rows();
    const std::uint32_t d = static_cast<std::uint32_t>(emb.cols());
    out.resize(20 + 4 * emb.data().size());
    std::memcpy(out.data(), kMagic, 4);
    std::memcpy(out.data() + 4, &kVersion, 4);
    std::memcpy(out.data() + 8, &n, 8);
    std::memcpy(out.data() + 16, &d, 4);
    for (std::size_t i = 0; i < emb.data().size(); ++i) {
      const float f = static_cast<float>(emb.data()[i]);
      std::memcpy(out.data() + 20 + 4 * i, &f, 4);
    }
  } else {
    for (std::size_t i = 0; i < emb.rows(); ++i) {
      const auto row = emb.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out += ',';
        out += FormatDouble(row[j]);
      }
      out += '\n';
    }
  }
  WriteTextFile(path, out);
}

DifficultyVector ReadDifficultyCsv(const std::filesystem::path& path,
                                   std::size_t expected_n) {
  const std::string text = ReadTextFile(path);
  const auto fields = ReadIndexedColumn(text, path, expected_n);
  DifficultyVector out(expected_n);
  for (std::size_t i = 0; i < expected_n; ++i) {
    out[i] = ParseDouble(fields[i], path, 0);
  }
  return out;
}

LabelVector ReadLabelsCsv(const std::filesystem::path& path,
                          std::size_t expected_n) {
  const std::string text = ReadTextFile(path);
  const auto fields = ReadIndexedColumn(text, path, expected_n);
  std::vector<int> labels(expected_n);
  for (std::size_t i = 0; i < expected_n; ++i) {
    const long long v = ParseInteger(fields[i], path, 0);
    if (v < 0 || v > std::numeric_limits<int>::max()) {
      throw Error(ErrorCode::kFormatError,
                  path.string() + ": label for index " + std::to_string(i) +
                      " is not a non-negative integer");
    }
    labels[i] = static_cast<int>(v);
  }
  return LabelVector::FromLabels(std::move(labels));
}

void WriteScalarCsv(const std::filesystem::path& path,
                    std::span<const double> values) {
  std::string out = "index,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += FormatDouble(values[i]);
    out += '\n';
  }
  WriteTextFile(path, out);
}

void WriteLabelsCsv(const std::filesystem::path& path,
                    std::span<const int> labels) {
  std::string out = "index,value\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += std::to_string(i) + ',' + std::to_string(labels[i]) + '\n';
  }
  WriteTextFile(path, out);
}

nlohmann::json ToJson(const SelectionReport& report) {
  nlohmann::json j;
  j["n"] = report.n;
  j["m"] = report.m;
  j["theta_final"] = report.theta_final;
  j["k"] = report.k;
  j["beta"] = report.beta;
  j["gamma"] = report.gamma ? nlohmann::json(*report.gamma) : nlohmann::json();
  j["per_class_counts"] = report.per_class_counts;
  j["graph_entropy"] = report.graph_entropy;
  j["seed"] = report.seed;
  j["strategy"] = report.strategy;
  j["warnings"] = report.warnings;
  return j;
}

SelectionReport SelectionReportFromJson(const nlohmann::json& j) {
  try {
    SelectionReport r;
    r.n = j.at("n").get<std::size_t>();
    r.m = j.at("m").get<std::size_t>();
    r.theta_final = j.at("theta_final").get<double>();
    r.k = j.at("k").get<std::size_t>();
    r.beta = j.at("beta").get<double>();
    if (!j.at("gamma").is_null()) r.gamma = j.at("gamma").get<double>();
    r.per_class_counts =
        j.at("per_class_counts").get<std::vector<std::size_t>>();
    r.graph_entropy = j.at("graph_entropy").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.strategy = j.value("strategy", std::string("blue-noise"));
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError,
                std::string("malformed selection report: ") + e.what());
  }
}

void WriteSelection(std::span<const SampleId> indices,
                    const SelectionReport& report,
                    const std::filesystem::path& index_path,
                    const std::filesystem::path& report_path) {
  std::string out;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i > 0 && indices[i] <= indices[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "selection indices must be sorted and unique");
    }
    out += std::to_string(indices[i]);
    out += '\n';
  }
  WriteTextFile(index_path, out);
  // nlohmann::json::dump prints doubles with round-trip precision.
  WriteTextFile(report_path, ToJson(report).dump(2) + "\n");
}

std::vector<SampleId> ReadSelectionIndices(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  std::vector<SampleId> out;
  const auto lines = SplitLines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = Trim(lines[i]);
    if (line.empty()) continue;
    const long long v = ParseInteger(line, path, i + 1);
    if (v < 0) throw Error(ErrorCode::kFormatError, "negative index");
    out.push_back(static_cast<SampleId>(v));
  }
  return out;
}

SelectionReport ReadSelectionReport(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError,
                path.string() + ": invalid JSON: " + e.what());
  }
  return SelectionReportFromJson(j);
}

}  // namespace ses
