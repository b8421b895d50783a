#include "perfcast/csv.hpp"

#include "perfcast/error.hpp"

#include <boost/tokenizer.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace perfcast::csv {

namespace {

std::string trim(std::string s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_line(const std::string& line, std::string_view source, std::size_t lineno)
{
  using Separator = boost::escaped_list_separator<char>;
  std::vector<std::string> out;
  try {
    boost::tokenizer<Separator> tok(line, Separator('\\', ',', '"'));
    for (const auto& field : tok) out.push_back(trim(field));
  } catch (const boost::escaped_list_error& e) {
    throw InputError(std::string(source) + ":" + std::to_string(lineno) + ": malformed CSV line (" + e.what() + ")");
  }
  return out;
}

} // namespace

std::optional<std::size_t> Table::column(std::string_view name) const
{
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name, std::string_view context) const
{
  if (auto c = column(name)) return *c;
  throw InputError(std::string(context) + ": missing column '" + std::string(name) + "'");
}

Table parse(std::istream& in, std::string_view source_name)
{
  Table table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_line(line, source_name, lineno);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    // trailing optional fields may be omitted
    if (fields.size() > table.header.size())
      throw InputError(std::string(source_name) + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
    fields.resize(table.header.size());
    table.rows.push_back(std::move(fields));
    table.lines.push_back(lineno);
  }
  if (!have_header) throw InputError(std::string(source_name) + ": empty file (header row required)");
  return table;
}

Table read(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return parse(in, path.string());
}

double parse_double(std::string_view cell, std::string_view context)
{
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc{} || ptr != end)
    throw InputError(std::string(context) + ": not a number: '" + std::string(cell) + "'");
  return value;
}

long long parse_int(std::string_view cell, std::string_view context)
{
  long long value = 0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc{} || ptr != end)
    throw InputError(std::string(context) + ": not an integer: '" + std::string(cell) + "'");
  return value;
}

std::string format_double(double value)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string join(const std::vector<std::string>& fields)
{
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n\\") == std::string::npos) {
      out += f;
      continue;
    }
    // backslash escapes, as the reader's tokenizer expects
    out += '"';
    for (char c : f) {
      if (c == '\n') {
        out += "\\n";
        continue;
      }
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    out += '"';
  }
  return out;
}

} // namespace perfcast::csv
