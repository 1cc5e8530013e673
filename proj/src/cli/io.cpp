#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include "internal.hpp"

namespace rsvi::cli {
namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read data file '" + path.string() + "'");
  return in;
}

std::uint64_t parse_count(const std::string& token, const std::filesystem::path& path,
                          std::size_t line) {
  std::uint64_t v = 0;
  const char* first = token.data();
  const char* last = first + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError(path.string() + ":" + std::to_string(line) + ": '" + token +
                      "' is not a non-negative integer");
  }
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

CountMatrix read_bag_of_words(const std::filesystem::path& path, std::size_t cols) {
  std::ifstream in = open_input(path);
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> cells;
  std::uint64_t max_doc = 0;
  std::uint64_t max_word = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ss(t);
    std::string a, b, c, extra;
    if (!(ss >> a >> b >> c) || (ss >> extra)) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 'doc_id word_id count'");
    }
    const auto doc = parse_count(a, path, lineno);
    const auto word = parse_count(b, path, lineno);
    cells[{doc, word}] += parse_count(c, path, lineno);
    max_doc = std::max(max_doc, doc);
    max_word = std::max(max_word, word);
  }
  if (cells.empty()) throw ConfigError("data file '" + path.string() + "' holds no counts");
  if (cols != 0 && max_word >= cols) {
    throw ConfigError(path.string() + ": word id " + std::to_string(max_word) +
                      " exceeds vocabulary size " + std::to_string(cols));
  }
  CountMatrix m;
  m.rows = max_doc + 1;
  m.cols = cols != 0 ? cols : max_word + 1;
  m.values.assign(m.rows * m.cols, 0);
  for (const auto& [key, count] : cells) {
    if (count > UINT32_MAX) throw ConfigError(path.string() + ": count overflows 32 bits");
    m.at(key.first, key.second) = static_cast<std::uint32_t>(count);
  }
  return m;
}

CountMatrix read_dense_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  CountMatrix m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::uint32_t> row;
    std::stringstream ss(t);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto v = parse_count(trim(cell), path, lineno);
      if (v > UINT32_MAX) throw ConfigError(path.string() + ": count overflows 32 bits");
      row.push_back(static_cast<std::uint32_t>(v));
    }
    if (m.rows == 0) m.cols = row.size();
    if (row.size() != m.cols) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(m.cols) + " columns, found " + std::to_string(row.size()));
    }
    m.values.insert(m.values.end(), row.begin(), row.end());
    ++m.rows;
  }
  if (m.rows == 0 || m.cols == 0) throw ConfigError("data file '" + path.string() + "' is empty");
  return m;
}

CountMatrix read_counts(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_dense_csv(path);
  return read_bag_of_words(path);
}

namespace detail {

std::string format_double(double x) {
  // Shortest representation that round-trips: stable across runs and exact.
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string settings_line(const Settings& s) {
  std::string line;
  for (const auto& [k, v] : s) {
    if (!line.empty()) line += ' ';
    line += k + '=' + v;
  }
  return line;
}

}  // namespace detail
}  // namespace rsvi::cli
