#include "fedexprox/trace.hpp"

#include <charconv>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fedexprox/errors.hpp"

namespace fedexprox::trace {
namespace {

constexpr const char* kConfigPrefix = "# config: ";
constexpr const char* kDivergedPrefix = "# diverged at iter ";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  // strtod handles inf/nan spellings written by %.17g
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw IoError(where + ": bad number '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s, const std::string& where) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(where + ": bad integer '" + s + "'");
  }
  return v;
}

bool starts_with(const std::string& s, const char* prefix) {
  return s.rfind(prefix, 0) == 0;
}

}  // namespace

void write_trace(std::ostream& out, const engine::RunTrace& trace, const std::string& config_line) {
  out << kConfigPrefix << config_line << '\n' << kHeader << '\n';
  for (const engine::TraceRecord& r : trace.records) {
    out << r.iter << ',' << fmt(r.sq_dist) << ',' << fmt(r.envelope_gap) << ',' << fmt(r.alpha)
        << ',' << fmt(r.bias_norm) << ',' << fmt(r.grad_norm) << ',' << r.local_iters << ',';
    for (std::size_t j = 0; j < r.sampled.size(); ++j) {
      if (j) out << ';';
      out << r.sampled[j];
    }
    out << '\n';
  }
  if (trace.diverged_at) out << kDivergedPrefix << *trace.diverged_at << '\n';
}

std::string format_trace(const engine::RunTrace& trace, const std::string& config_line) {
  std::ostringstream os;
  write_trace(os, trace, config_line);
  return os.str();
}

void write_trace(const engine::RunTrace& trace, const std::filesystem::path& path,
                 const std::string& config_line) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open trace file for writing: " + path.string());
  write_trace(out, trace, config_line);
  out.flush();
  if (!out) throw IoError("failed writing trace file: " + path.string());
}

ParsedTrace read_trace(std::istream& in, const std::string& origin) {
  ParsedTrace parsed;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (starts_with(line, kConfigPrefix)) {
      parsed.config_line = line.substr(std::char_traits<char>::length(kConfigPrefix));
      continue;
    }
    if (starts_with(line, kDivergedPrefix)) {
      parsed.diverged_at =
          parse_size(line.substr(std::char_traits<char>::length(kDivergedPrefix)), where);
      continue;
    }
    if (line[0] == '#') continue;
    if (!header_seen) {
      if (line != kHeader) throw IoError(where + ": unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const std::vector<std::string> cols = split(line, ',');
    if (cols.size() != 8) throw IoError(where + ": expected 8 columns");
    engine::TraceRecord r;
    r.iter = parse_size(cols[0], where);
    r.sq_dist = parse_double(cols[1], where);
    r.envelope_gap = parse_double(cols[2], where);
    r.alpha = parse_double(cols[3], where);
    r.bias_norm = parse_double(cols[4], where);
    r.grad_norm = parse_double(cols[5], where);
    r.local_iters = parse_size(cols[6], where);
    if (!cols[7].empty()) {
      for (const std::string& idx : split(cols[7], ';')) r.sampled.push_back(parse_size(idx, where));
    }
    parsed.records.push_back(std::move(r));
  }
  if (!header_seen) throw IoError(origin + ": no trace header found");
  return parsed;
}

ParsedTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file: " + path.string());
  return read_trace(in, path.string());
}

}  // namespace fedexprox::trace
