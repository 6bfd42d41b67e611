#pragma once

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "stylerec/error.hpp"

namespace stylerec {

// Shortest text that round-trips a double exactly (17 significant digits).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, std::uint64_t line,
                           const std::string& field) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError("not a number: '" + s + "'", line, field);
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, std::uint64_t line,
                               const std::string& field) {
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE || s[0] == '-')
    throw ParseError("not a non-negative integer: '" + s + "'", line, field);
  return v;
}

// Line-oriented reader for the small "keyword value" artifact formats
// (palettes, co-occurrence matrices, joint tables).
class TextReader {
 public:
  TextReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  std::uint64_t line_number() const { return line_; }

  std::string next_line() {
    std::string s;
    if (!std::getline(in_, s))
      throw TruncatedError(name_ + ": unexpected end of file after line " +
                           std::to_string(line_));
    ++line_;
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
  }

  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

  // First line must be "<format> <version>".
  void expect_header(const std::string& format, std::uint32_t version) {
    std::string s = next_line();
    std::istringstream iss(s);
    std::string name;
    std::uint64_t ver = 0;
    if (!(iss >> name >> ver) || name != format)
      throw FormatError(name_ + ": not a " + format + " file");
    if (ver != version)
      throw FormatError(name_ + ": unsupported " + format + " version " +
                        std::to_string(ver));
  }

  // "key value..." line; returns everything after the key.
  std::string keyword_line(const std::string& key) {
    std::string s = next_line();
    if (s.rfind(key + " ", 0) != 0)
      throw ParseError("expected '" + key + " ...'", line_, key);
    return s.substr(key.size() + 1);
  }

  std::uint64_t keyword_u64(const std::string& key) {
    return parse_u64(keyword_line(key), line_, key);
  }

  double keyword_double(const std::string& key) {
    return parse_double(keyword_line(key), line_, key);
  }

  // Whitespace-separated numbers; exactly n of them.
  std::vector<double> number_line(std::size_t n) {
    std::string s = next_line();
    std::istringstream iss(s);
    std::vector<double> out;
    std::string tok;
    while (iss >> tok) out.push_back(parse_double(tok, line_, "value"));
    if (out.size() != n)
      throw ParseError("expected " + std::to_string(n) + " values, got " +
                           std::to_string(out.size()),
                       line_, "row");
    return out;
  }

  std::vector<std::string> token_line(std::size_t n) {
    std::string s = next_line();
    std::istringstream iss(s);
    std::vector<std::string> out;
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    if (out.size() != n)
      throw ParseError("expected " + std::to_string(n) + " tokens, got " +
                           std::to_string(out.size()),
                       line_, "row");
    return out;
  }

 private:
  std::istream& in_;
  std::string name_;
  std::uint64_t line_ = 0;
};

}  // namespace stylerec
