#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "fedexprox/engine.hpp"

// CSV trace files:
//
//   # config: key=value;key=value;...
//   iter,sq_dist,envelope_gap,alpha,bias_norm,grad_norm,local_iters,sampled
//   0,...,
//   1,...,0;3;7
//   # diverged at iter k        (only for diverged runs)
//
// Floats use 17 significant digits so a read-back trace is bit-identical.
// `sampled` joins client indices with ';'.

namespace fedexprox::trace {

inline constexpr const char* kHeader =
    "iter,sq_dist,envelope_gap,alpha,bias_norm,grad_norm,local_iters,sampled";

struct ParsedTrace {
  std::string config_line;  // text after "# config: "
  std::vector<engine::TraceRecord> records;
  std::optional<std::size_t> diverged_at;
};

void write_trace(std::ostream& out, const engine::RunTrace& trace, const std::string& config_line);
void write_trace(const engine::RunTrace& trace, const std::filesystem::path& path,
                 const std::string& config_line);
std::string format_trace(const engine::RunTrace& trace, const std::string& config_line);

ParsedTrace read_trace(std::istream& in, const std::string& origin = "<stream>");
ParsedTrace read_trace(const std::filesystem::path& path);

}  // namespace fedexprox::trace
