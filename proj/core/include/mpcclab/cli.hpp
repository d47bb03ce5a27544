#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpcclab/pipa.hpp"

namespace mpcclab {

enum class Command { RunPipa, RunTrpipa, VerifyTable, CheckDerivatives, VerifyLemma };
enum class TraceFormat { Csv, Table };

struct RunSpec {
  Command command = Command::RunPipa;
  std::string problem = "counterexample";
  std::map<std::string, double> overrides; ///< validated numeric parameters
  std::optional<std::string> out_path;
  TraceFormat format = TraceFormat::Table;
  std::optional<std::string> config_path;
};

/// Parses `command --flag value ...` (no leading program name).  Unknown
/// flags, unknown parameter names in a config file, malformed numbers and
/// out-of-range values all raise UsageError.
RunSpec parse_args(const std::vector<std::string>& argv);

std::string usage_text();

/// CSV schema: `k,x,y,w,tau,pred_model,ared_signed,comp,normF,delta,p`
/// (vector-valued problems expand x,y,w,z into x0,x1,...).  Doubles are
/// written with 17 significant digits so a written trace re-parses to
/// numerically identical records.
void write_trace(const std::vector<TraceRecord>& trace, TraceFormat format, std::ostream& out);
void write_trace_file(const std::vector<TraceRecord>& trace, TraceFormat format,
                      const std::string& path);

/// Reads back a CSV produced by write_trace.  d_norm is not part of the
/// schema and comes back as NaN.
std::vector<TraceRecord> read_trace_csv(std::istream& in);

/// Executes a parsed command.  Returns the process exit code: 0 on success,
/// 1 when a verification reports failures, 3 on solver errors.
int run_command(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// main() adapter: parse + run, mapping UsageError to exit code 2.
int cli_main(int argc, const char* const* argv);

} // namespace mpcclab
