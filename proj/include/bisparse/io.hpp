#pragma once

// File formats: matrices (CSV or the "RSRM" raw binary layout), 8-bit binary
// PGM images, key=value metadata/config text, and label columns.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bisparse/matrix.hpp"

namespace bisparse {

/// Malformed input; the message carries the line/column or byte offset.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure; the message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MatrixFormat { csv, raw };

/// ".csv" selects CSV, anything else raw.
MatrixFormat format_for_path(const std::filesystem::path& path);

/// Raw layout: "RSRM", u64 LE rows, u64 LE cols, rows*cols f64 LE row-major.
std::string encode_raw(const DenseMatrix& m);
DenseMatrix decode_raw(std::string_view bytes);

/// One row per line, comma separated, no header, 17 significant digits.
std::string encode_csv(const DenseMatrix& m);
DenseMatrix decode_csv(std::string_view text);

/// Reads either format; raw is recognized by its magic bytes.
DenseMatrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const DenseMatrix& m);
void write_matrix(const std::filesystem::path& path, const DenseMatrix& m, MatrixFormat format);

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, height * width
};

std::string encode_pgm(const GrayImage& image);
GrayImage decode_pgm(std::string_view bytes);
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Whole-file atomic write: temp file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

using KeyValues = std::map<std::string, std::string>;

/// "key=value" lines; blank lines and '#' comments ignored.
KeyValues parse_key_values(std::string_view text);
std::string encode_key_values(const KeyValues& kv);

std::string encode_labels(const std::vector<std::size_t>& labels);
std::vector<std::size_t> decode_labels(std::string_view text);

}  // namespace bisparse
