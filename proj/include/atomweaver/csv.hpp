#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace atomweaver {

/// Locale-independent number formatting: integers verbatim, doubles with 12
/// significant digits ('.' decimal separator).
inline std::string format_number(double v) {
  if (!std::isfinite(v)) throw std::domain_error("non-finite value in CSV output");
  if (v == 0.0) v = 0.0;  // drop negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

template <class T>
std::string format_cell(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "1" : "0";
  } else if constexpr (std::is_integral_v<T>) {
    return std::to_string(v);
  } else if constexpr (std::is_floating_point_v<T>) {
    return format_number(static_cast<double>(v));
  } else {
    return std::string(std::string_view(v));
  }
}

/// Builds CSV text in memory; header row first.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) {
    append_line(header);
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    if (sizeof...(Cells) != columns_) throw std::logic_error("CSV row width does not match header");
    append_line({format_cell(cells)...});
  }

  const std::string& str() const { return text_; }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << text_;
    if (!os) throw std::runtime_error("failed writing " + path.string());
  }

 private:
  void append_line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  std::size_t columns_;
  std::string text_;
};

}  // namespace atomweaver
