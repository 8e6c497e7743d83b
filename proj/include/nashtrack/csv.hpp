#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace nashtrack::csv {

// Shortest representation that round-trips; identical input gives identical bytes.
inline std::string number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(&out) {}

  Writer& operator<<(double v) { return cell(number(v)); }
  Writer& operator<<(std::int64_t v) { return cell(std::to_string(v)); }
  Writer& operator<<(std::uint64_t v) { return cell(std::to_string(v)); }
  Writer& operator<<(int v) { return cell(std::to_string(v)); }
  Writer& operator<<(unsigned v) { return cell(std::to_string(v)); }
  Writer& operator<<(std::string_view v) { return cell(field(v)); }
  Writer& operator<<(const char* v) { return cell(field(v)); }
  Writer& operator<<(const std::string& v) { return cell(field(v)); }
  Writer& operator<<(bool v) { return cell(v ? "true" : "false"); }
  // Missing values are written as empty fields.
  Writer& operator<<(const std::optional<double>& v) { return v ? *this << *v : cell(""); }

  void header(const std::vector<std::string>& names) {
    for (const auto& n : names) *this << n;
    end_row();
  }

  // RFC 4180 line terminator
  void end_row() {
    *out_ << "\r\n";
    first_ = true;
  }

 private:
  Writer& cell(const std::string& text) {
    if (!first_) *out_ << ',';
    *out_ << text;
    first_ = false;
    return *this;
  }

  std::ostream* out_;
  bool first_ = true;
};

}  // namespace nashtrack::csv
