#pragma once

// CSV emission with a '#'-prefixed metadata header. Numbers are printed
// with %.17g so identical inputs reproduce byte-identical files.

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace polaron {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::string path) : path_(std::move(path)), out_(path_) {
    if (!out_) throw std::runtime_error("cannot open output file: " + path_);
  }

  void metadata(const std::string& key, const std::string& value) {
    out_ << "# " << key << " = " << value << "\n";
  }
  void metadata(const std::string& key, double value) { metadata(key, format_double(value)); }
  void metadata(const std::string& key, long long value) {
    metadata(key, std::to_string(value));
  }

  void header(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i)
      out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }
  void row(const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out_ << (i ? "," : "") << format_double(cells[i]);
    out_ << "\n";
  }

  void close() {
    out_.flush();
    if (!out_) throw std::runtime_error("write failure: " + path_);
    out_.close();
  }

 private:
  std::string path_;
  std::ofstream out_;
};

// FNV-1a, used to stamp outputs with a content hash of their inputs.
inline unsigned long long fnv1a(const std::string& data,
                                unsigned long long h = 14695981039346656037ull) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace polaron
