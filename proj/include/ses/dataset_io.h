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

// Readers and writers for every file the engine consumes or produces.
//
// Embeddings come either as a binary "SESM" file or as a headerless CSV with
// one row per sample:
//
//   offset  size      field
//   0       4         magic "SESM"
//   4       4         version (u32, little-endian) = 1
//   8       8         n (u64)
//   16      4         d (u32)
//   20      4*n*d     row-major little-endian float32 values
//
// Per-sample scalars (difficulty, labels) are CSV files with an
// `index,value` header whose indices form a permutation of [0, n).
//
// Values are widened to double on load; all downstream arithmetic is 64-bit.

#ifndef SES_DATASET_IO_H_
#define SES_DATASET_IO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace ses {

using SampleId = std::uint32_t;

// n x d row-major matrix of finite values. Row i is sample i.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  // Throws EmptyDataset when n == 0 and FormatError on a shape mismatch,
  // d == 0, or any non-finite value.
  EmbeddingMatrix(std::size_t n, std::size_t d, std::vector<double> data);

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return d_; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * d_, d_};
  }
  const std::vector<double>& data() const { return data_; }

  // Matrix made of the given rows, in order.
  EmbeddingMatrix Subset(std::span<const SampleId> rows) const;

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> data_;
};

struct LabelVector {
  std::vector<int> labels;
  int num_classes = 0;  // max label + 1

  static LabelVector FromLabels(std::vector<int> labels);
};

using DifficultyVector = std::vector<double>;

enum class EmbeddingFormat { kBinary, kCsv };

// Picks kCsv for a ".csv" extension and kBinary otherwise.
EmbeddingFormat GuessEmbeddingFormat(const std::filesystem::path& path);

EmbeddingMatrix ReadEmbeddings(const std::filesystem::path& path,
                               EmbeddingFormat format);
// Binary output stores float32, so values are rounded on write.
void WriteEmbeddings(const EmbeddingMatrix& emb,
                     const std::filesystem::path& path, EmbeddingFormat format);

// `index,value` CSV readers. Indices must be a permutation of
// [0, expected_n): a repeated index is DuplicateIndex, an absent one is
// MissingIndex, anything else malformed (including an index >= expected_n)
// is FormatError.
DifficultyVector ReadDifficultyCsv(const std::filesystem::path& path,
                                   std::size_t expected_n);
LabelVector ReadLabelsCsv(const std::filesystem::path& path,
                          std::size_t expected_n);
void WriteScalarCsv(const std::filesystem::path& path,
                    std::span<const double> values);
void WriteLabelsCsv(const std::filesystem::path& path,
                    std::span<const int> labels);

// Run report written next to every selection.
struct SelectionReport {
  std::size_t n = 0;
  std::size_t m = 0;
  double theta_final = 1.0;
  std::size_t k = 0;
  double beta = 0.0;
  std::optional<double> gamma;
  std::vector<std::size_t> per_class_counts;
  double graph_entropy = 0.0;
  std::uint64_t seed = 0;
  std::string strategy = "blue-noise";
  std::vector<std::string> warnings;

  bool operator==(const SelectionReport&) const = default;
};

nlohmann::json ToJson(const SelectionReport& report);
SelectionReport SelectionReportFromJson(const nlohmann::json& json);

// Writes `indices` (must be sorted ascending and unique) one per line, and
// the report as pretty-printed JSON.
void WriteSelection(std::span<const SampleId> indices,
                    const SelectionReport& report,
                    const std::filesystem::path& index_path,
                    const std::filesystem::path& report_path);
std::vector<SampleId> ReadSelectionIndices(const std::filesystem::path& path);
SelectionReport ReadSelectionReport(const std::filesystem::path& path);

// Whole-file helpers shared by the writers of debug dumps.
void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace ses

#endif  // SES_DATASET_IO_H_
