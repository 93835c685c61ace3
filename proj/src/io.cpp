#include "bisparse/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace bisparse {

namespace {

constexpr char kRawMagic[4] = {'R', 'S', 'R', 'M'};
constexpr std::size_t kRawHeader = 4 + 8 + 8;

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint64_t get_u64(std::string_view bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + b])) << (8 * b);
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

MatrixFormat format_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? MatrixFormat::csv : MatrixFormat::raw;
}

std::string encode_raw(const DenseMatrix& m) {
  std::string out;
  out.reserve(kRawHeader + 8 * m.size());
  out.append(kRawMagic, 4);
  put_u64(out, m.rows());
  put_u64(out, m.cols());
  for (double v : m.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

DenseMatrix decode_raw(std::string_view bytes) {
  if (bytes.size() < kRawHeader)
    throw ParseError("raw matrix: truncated header (" + std::to_string(bytes.size()) + " bytes)");
  if (std::memcmp(bytes.data(), kRawMagic, 4) != 0)
    throw ParseError("raw matrix: bad magic at byte offset 0");
  const std::uint64_t rows = get_u64(bytes, 4);
  const std::uint64_t cols = get_u64(bytes, 12);
  if (rows == 0 || cols == 0) throw ParseError("raw matrix: zero dimension at byte offset 4");
  if (cols > std::numeric_limits<std::uint64_t>::max() / 8 / rows)
    throw ParseError("raw matrix: dimensions overflow at byte offset 4");
  const std::uint64_t expected = kRawHeader + 8 * rows * cols;
  if (bytes.size() != expected)
    throw ParseError("raw matrix: expected " + std::to_string(expected) + " bytes, found " +
                     std::to_string(bytes.size()));
  std::vector<double> data(rows * cols);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const std::size_t offset = kRawHeader + 8 * k;
    data[k] = std::bit_cast<double>(get_u64(bytes, offset));
    if (!std::isfinite(data[k]))
      throw ParseError("raw matrix: non-finite value at byte offset " + std::to_string(offset));
  }
  return DenseMatrix(rows, cols, std::move(data));
}

std::string encode_csv(const DenseMatrix& m) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof buf, m(i, j), std::chars_format::general, 17);
      out.append(buf, res.ptr);
    }
    out.push_back('\n');
  }
  return out;
}

DenseMatrix decode_csv(std::string_view text) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;

    std::size_t fields = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string_view raw = line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos);
      const std::string_view field = trim(raw);
      double v = 0.0;
      const char* first = field.data();
      const char* last = field.data() + field.size();
      if (!field.empty() && *first == '+') ++first;
      const auto res = std::from_chars(first, last, v);
      if (field.empty() || res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) {
        throw ParseError("csv matrix: bad number '" + std::string(field) + "' at line " +
                         std::to_string(line_no) + ", column " + std::to_string(pos + 1));
      }
      data.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (rows == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw ParseError("csv matrix: line " + std::to_string(line_no) + " has " +
                       std::to_string(fields) + " fields, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("csv matrix: no data rows");
  return DenseMatrix(rows, cols, std::move(data));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into '" + path.string() + "'");
  }
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kRawMagic, 4) == 0) return decode_raw(bytes);
    return decode_csv(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
  write_matrix(path, m, format_for_path(path));
}

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m, MatrixFormat format) {
  write_file_atomic(path, format == MatrixFormat::csv ? encode_csv(m) : encode_raw(m));
}

std::string encode_pgm(const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height)
    throw std::invalid_argument("encode_pgm: pixel count does not match dimensions");
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

GrayImage decode_pgm(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos])))
      v = v * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
    if (pos == start)
      throw ParseError(std::string("pgm: expected ") + what + " at byte offset " + std::to_string(start));
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw ParseError("pgm: expected 'P5' magic at byte offset 0");
  pos = 2;
  GrayImage img;
  img.width = read_uint("width");
  img.height = read_uint("height");
  const std::size_t maxval = read_uint("maxval");
  if (img.width == 0 || img.height == 0) throw ParseError("pgm: zero image dimension");
  if (maxval == 0 || maxval > 255) throw ParseError("pgm: only 8-bit maxval (1..255) supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw ParseError("pgm: missing whitespace after maxval at byte offset " + std::to_string(pos));
  ++pos;
  const std::size_t count = img.width * img.height;
  if (bytes.size() - pos < count)
    throw ParseError("pgm: expected " + std::to_string(count) + " pixel bytes at offset " +
                     std::to_string(pos) + ", found " + std::to_string(bytes.size() - pos));
  img.pixels.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto raw = static_cast<unsigned char>(bytes[pos + k]);
    img.pixels[k] = static_cast<std::uint8_t>(maxval == 255 ? raw : (raw * 255 + maxval / 2) / maxval);
  }
  return img;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  try {
    return decode_pgm(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  write_file_atomic(path, encode_pgm(image));
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("key=value: missing '=' at line " + std::to_string(line_no));
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError("key=value: empty key at line " + std::to_string(line_no));
    if (kv.count(key))
      throw ParseError("key=value: duplicate key '" + key + "' at line " + std::to_string(line_no));
    kv[key] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

std::string encode_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string encode_labels(const std::vector<std::size_t>& labels) {
  std::string out;
  for (std::size_t l : labels) out += std::to_string(l) + "\n";
  return out;
}

std::vector<std::size_t> decode_labels(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (line.empty()) continue;
    std::size_t v = 0;
    const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
    if (res.ec != std::errc{} || res.ptr != line.data() + line.size())
      throw ParseError("labels: bad label '" + std::string(line) + "' at line " + std::to_string(line_no));
    out.push_back(v);
  }
  return out;
}

}  // namespace bisparse
