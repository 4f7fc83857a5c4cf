#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "psace/counts.hpp"
#include "psace/error.hpp"

namespace psace {

struct ParsedCounts {
  ObservedCounts counts;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_int(std::string_view text, std::int64_t& value) {
  text = trim(text);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

[[noreturn]] inline void parse_error(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::parse, source + ":" + std::to_string(line) + ": " + what);
}

/// Reads "header\nrow\nrow..." where every row has `width` integer fields.
/// Calls row(values, line_number) for each non-blank data line.
template <class Row>
void read_integer_csv(std::istream& in, const std::string& source, std::string_view header, std::size_t width,
                      Row&& row) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (!have_header) {
      if (trim(view) != header)
        parse_error(source, line_no, "expected header '" + std::string(header) + "'");
      have_header = true;
      continue;
    }
    if (trim(view).empty()) continue;
    const auto fields = split_fields(view);
    if (fields.size() != width)
      parse_error(source, line_no, "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    std::vector<std::int64_t> values(width);
    for (std::size_t i = 0; i < width; ++i)
      if (!parse_int(fields[i], values[i]))
        parse_error(source, line_no, "field " + std::to_string(i + 1) + " is not an integer: '" +
                                         std::string(trim(fields[i])) + "'");
    row(values, line_no);
  }
  if (!have_header) parse_error(source, 1, "missing header '" + std::string(header) + "'");
}

inline void check_binary(const std::string& source, std::size_t line, const char* field, std::int64_t v) {
  if (v != 0 && v != 1) parse_error(source, line, std::string(field) + " must be 0 or 1");
}

template <class Rows>
ObservedCounts assemble(const Rows& rows, const std::string& source) {
  if (rows.empty()) parse_error(source, 1, "no data rows");
  std::int64_t max_trial = 0;
  std::set<std::int64_t> seen;
  for (const auto& [key, n] : rows) {
    seen.insert(std::get<0>(key));
    max_trial = std::max(max_trial, std::get<0>(key));
  }
  std::string gaps;
  for (std::int64_t t = 1; t <= max_trial; ++t)
    if (!seen.count(t)) gaps += (gaps.empty() ? "" : ", ") + std::to_string(t);
  if (!gaps.empty())
    throw Error(ErrorCode::parse, source + ": trial ids must be contiguous from 1; missing " + gaps);
  ObservedCounts counts(static_cast<std::size_t>(max_trial));
  for (const auto& [key, n] : rows) {
    const auto [t, z, s, y] = key;
    counts(static_cast<int>(z), static_cast<int>(s), static_cast<int>(y), static_cast<std::size_t>(t - 1)) += n;
  }
  return counts;
}

}  // namespace detail

/// Parses `trial,z,s,y,count` rows. Duplicate (trial, z, s, y) rows are
/// summed with a warning; trial ids must run 1..N_R without gaps.
inline ParsedCounts parse_counts_csv(std::istream& in, const std::string& source = "<input>") {
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t>;
  std::map<Key, std::int64_t> rows;
  ParsedCounts out;
  detail::read_integer_csv(in, source, "trial,z,s,y,count", 5, [&](const std::vector<std::int64_t>& v, std::size_t line) {
    if (v[0] < 1) detail::parse_error(source, line, "trial must be a positive integer");
    detail::check_binary(source, line, "z", v[1]);
    detail::check_binary(source, line, "s", v[2]);
    detail::check_binary(source, line, "y", v[3]);
    if (v[4] < 0) detail::parse_error(source, line, "count must be non-negative");
    const Key key{v[0], v[1], v[2], v[3]};
    if (rows.count(key))
      out.warnings.push_back(source + ":" + std::to_string(line) + ": duplicate cell (trial=" + std::to_string(v[0]) +
                             ", z=" + std::to_string(v[1]) + ", s=" + std::to_string(v[2]) + ", y=" +
                             std::to_string(v[3]) + ") summed");
    rows[key] += v[4];
  });
  out.counts = detail::assemble(rows, source);
  const auto more = validate_counts(out.counts);
  out.warnings.insert(out.warnings.end(), more.begin(), more.end());
  return out;
}

inline ParsedCounts read_counts_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::parse, "cannot open '" + path + "'");
  return parse_counts_csv(in, path);
}

/// Unit-level `trial,z,s,y` rows tabulated into counts.
inline ParsedCounts tabulate_units_csv(std::istream& in, const std::string& source = "<input>") {
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t>;
  std::map<Key, std::int64_t> rows;
  detail::read_integer_csv(in, source, "trial,z,s,y", 4, [&](const std::vector<std::int64_t>& v, std::size_t line) {
    if (v[0] < 1) detail::parse_error(source, line, "trial must be a positive integer");
    detail::check_binary(source, line, "z", v[1]);
    detail::check_binary(source, line, "s", v[2]);
    detail::check_binary(source, line, "y", v[3]);
    rows[Key{v[0], v[1], v[2], v[3]}] += 1;
  });
  ParsedCounts out;
  out.counts = detail::assemble(rows, source);
  out.warnings = validate_counts(out.counts);
  return out;
}

/// Writes all 8 N_R cells, zeros included, in (trial, z, s, y) order.
inline void write_counts_csv(std::ostream& out, const ObservedCounts& counts) {
  out << "trial,z,s,y,count\n";
  for (std::size_t r = 0; r < counts.n_trials(); ++r)
    for (int z = 1; z >= 0; --z)
      for (int s = 1; s >= 0; --s)
        for (int y = 1; y >= 0; --y)
          out << r + 1 << ',' << z << ',' << s << ',' << y << ',' << counts(z, s, y, r) << '\n';
}

}  // namespace psace
