#include "mpcclab/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "mpcclab/analysis.hpp"
#include "mpcclab/model.hpp"
#include "mpcclab/trpipa.hpp"

namespace mpcclab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string>& numeric_params() {
  static const std::vector<std::string> names = {"c",       "sigma",    "gamma",
                                                 "rho",     "alpha",    "eps-frac",
                                                 "eps-term", "max-iter", "delta0"};
  return names;
}

double parse_number(const std::string& name, const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw UsageError("malformed number for --" + name + ": '" + text + "'");
  }
  if (used != text.size()) {
    throw UsageError("malformed number for --" + name + ": '" + text + "'");
  }
  return value;
}

void check_range(const std::string& name, double value) {
  auto fail = [&](const char* what) {
    throw UsageError("--" + name + ": " + what);
  };
  if (name == "c" || name == "alpha" || name == "eps-term" || name == "delta0") {
    if (!(value > 0.0)) fail("must be positive");
  } else if (name == "sigma" || name == "gamma" || name == "rho" || name == "eps-frac") {
    if (!(value > 0.0 && value < 1.0)) fail("must lie in (0,1)");
  } else if (name == "max-iter") {
    if (!(value >= 1.0) || value != std::floor(value)) fail("must be a positive integer");
  }
}

Command parse_command(const std::string& word) {
  if (word == "run-pipa") return Command::RunPipa;
  if (word == "run-trpipa") return Command::RunTrpipa;
  if (word == "verify-table") return Command::VerifyTable;
  if (word == "check-derivatives") return Command::CheckDerivatives;
  if (word == "verify-lemma") return Command::VerifyLemma;
  throw UsageError("unknown command '" + word + "'");
}

// key = value lines, '#' starts a comment, names as on the command line
std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line is not name=value: '" + line + "'");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::string format_double(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

std::vector<std::string> value_headers(const TraceRecord& rec, const char* base,
                                       std::size_t count) {
  std::vector<std::string> h;
  if (count == 1 && rec.point.z.empty() && rec.point.x.size() == 1 && rec.point.y.size() == 1) {
    h.emplace_back(base);
    return h;
  }
  for (std::size_t i = 0; i < count; ++i) h.push_back(std::string(base) + std::to_string(i));
  return h;
}

} // namespace

std::string usage_text() {
  return "usage: mpcclab <command> [--flag value ...]\n"
         "commands:\n"
         "  run-pipa           run the penalty interior-point solver\n"
         "  run-trpipa         run the trust-region variant\n"
         "  verify-table       reproduce the stored reference run (10 rows)\n"
         "  check-derivatives  finite-difference check of a problem's derivatives\n"
         "  verify-lemma       check the inductive bounds on a 50-iteration run\n"
         "flags:\n"
         "  --problem NAME   built-in problem (counterexample, bilinear)\n"
         "  --c --sigma --gamma --rho --alpha --eps-frac --eps-term --max-iter --delta0\n"
         "  --out PATH       write the trace to PATH instead of stdout\n"
         "  --format FMT     csv or table\n"
         "  --config PATH    name=value defaults, flags take precedence\n";
}

RunSpec parse_args(const std::vector<std::string>& argv) {
  if (argv.empty()) throw UsageError("missing command");
  RunSpec spec;
  spec.command = parse_command(argv[0]);
  if (spec.command == Command::VerifyTable) spec.overrides["max-iter"] = 10;

  std::map<std::string, std::string> flags;
  bool format_given = false, problem_given = false, out_given = false;
  for (std::size_t i = 1; i < argv.size(); ++i) {
    const std::string& arg = argv[i];
    if (arg.rfind("--", 0) != 0) throw UsageError("expected a flag, got '" + arg + "'");
    const std::string name = arg.substr(2);
    if (i + 1 >= argv.size()) throw UsageError("--" + name + " needs a value");
    const std::string value = argv[++i];
    if (name == "problem") {
      spec.problem = value;
      problem_given = true;
    } else if (name == "out") {
      spec.out_path = value;
      out_given = true;
    } else if (name == "format") {
      if (value == "csv") spec.format = TraceFormat::Csv;
      else if (value == "table") spec.format = TraceFormat::Table;
      else throw UsageError("--format must be csv or table");
      format_given = true;
    } else if (name == "config") {
      spec.config_path = value;
    } else if (std::find(numeric_params().begin(), numeric_params().end(), name) !=
               numeric_params().end()) {
      const double v = parse_number(name, value);
      check_range(name, v);
      spec.overrides[name] = v;
    } else {
      throw UsageError("unknown flag --" + name);
    }
  }

  if (spec.config_path) {
    for (const auto& [name, value] : parse_config_file(*spec.config_path)) {
      if (name == "problem") {
        if (!problem_given) spec.problem = value;
      } else if (name == "out") {
        if (!out_given) spec.out_path = value;
      } else if (name == "format") {
        if (!format_given) {
          if (value == "csv") spec.format = TraceFormat::Csv;
          else if (value == "table") spec.format = TraceFormat::Table;
          else throw UsageError("format must be csv or table");
        }
      } else if (std::find(numeric_params().begin(), numeric_params().end(), name) !=
                 numeric_params().end()) {
        const double v = parse_number(name, value);
        check_range(name, v);
        spec.overrides.emplace(name, v); // flags already present win
      } else {
        throw UsageError("unknown parameter '" + name + "' in config file");
      }
    }
  }
  return spec;
}

void write_trace(const std::vector<TraceRecord>& trace, TraceFormat format, std::ostream& out) {
  if (format == TraceFormat::Csv) {
    if (trace.empty()) {
      out << "k,x,y,w,tau,pred_model,ared_signed,comp,normF,delta,p\n";
      return;
    }
    const TraceRecord& first = trace.front();
    std::vector<std::string> head = {"k"};
    for (const auto& h : value_headers(first, "x", first.point.x.size())) head.push_back(h);
    for (const auto& h : value_headers(first, "y", first.point.y.size())) head.push_back(h);
    for (const auto& h : value_headers(first, "w", first.point.w.size())) head.push_back(h);
    for (std::size_t i = 0; i < first.point.z.size(); ++i) head.push_back("z" + std::to_string(i));
    for (const char* h : {"tau", "pred_model", "ared_signed", "comp", "normF", "delta", "p"})
      head.emplace_back(h);
    for (std::size_t i = 0; i < head.size(); ++i) out << (i ? "," : "") << head[i];
    out << '\n';
    for (const TraceRecord& rec : trace) {
      out << rec.k;
      for (double v : rec.point.x) out << ',' << format_double(v, 17);
      for (double v : rec.point.y) out << ',' << format_double(v, 17);
      for (double v : rec.point.w) out << ',' << format_double(v, 17);
      for (double v : rec.point.z) out << ',' << format_double(v, 17);
      out << ',' << format_double(rec.tau, 17) << ',' << format_double(rec.pred, 17) << ','
          << format_double(rec.ared, 17) << ',' << format_double(rec.comp, 17) << ','
          << format_double(rec.F_norm, 17) << ',' << format_double(rec.delta, 17) << ','
          << rec.p_exp << '\n';
    }
    return;
  }

  // table format mirrors the reference layout: iterates plus both
  // reduction columns at 8 significant digits
  out << std::setw(4) << "k" << std::setw(16) << "x" << std::setw(16) << "y" << std::setw(16)
      << "w" << std::setw(16) << "pred_model" << std::setw(16) << "ared_signed" << '\n';
  for (const TraceRecord& rec : trace) {
    auto cell = [](double v) { return std::isnan(v) ? std::string{} : format_double(v, 8); };
    out << std::setw(4) << rec.k << std::setw(16) << cell(rec.point.x.empty() ? kNaN : rec.point.x[0])
        << std::setw(16) << cell(rec.point.y.empty() ? kNaN : rec.point.y[0]) << std::setw(16)
        << cell(rec.point.w.empty() ? kNaN : rec.point.w[0]) << std::setw(16) << cell(rec.pred)
        << std::setw(16) << cell(rec.ared) << '\n';
  }
}

void write_trace_file(const std::vector<TraceRecord>& trace, TraceFormat format,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_trace(trace, format, out);
  if (!out.good()) throw IoError("failed writing trace to '" + path + "'");
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty trace file");
  std::vector<std::string> head;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) head.push_back(cell);
  }
  if (head.empty() || head.front() != "k") throw IoError("not a trace CSV");
  auto block_len = [&head](const std::string& base) {
    std::size_t n = 0;
    for (const auto& h : head) {
      if (h == base) return std::size_t{1};
      if (h.rfind(base, 0) == 0 && h.size() > base.size() &&
          std::isdigit(static_cast<unsigned char>(h[base.size()])))
        ++n;
    }
    return n;
  };
  const std::size_t nx = block_len("x"), ny = block_len("y"), nw = block_len("w"),
                    nz = block_len("z");

  std::vector<TraceRecord> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != head.size()) throw IoError("trace row has wrong cell count");
    std::size_t at = 0;
    auto next = [&cells, &at]() { return cells.at(at++); };
    auto next_d = [&next, &line]() {
      const std::string c = next();
      if (c == "nan") return kNaN;
      try {
        return std::stod(c);
      } catch (const std::exception&) {
        throw IoError("malformed trace cell '" + c + "' in line: " + line);
      }
    };
    TraceRecord rec;
    try {
      rec.k = static_cast<int>(std::stol(next()));
    } catch (const std::exception&) {
      throw IoError("malformed trace row index in line: " + line);
    }
    rec.point.x.resize(nx);
    rec.point.y.resize(ny);
    rec.point.w.resize(nw);
    rec.point.z.resize(nz);
    for (auto& v : rec.point.x) v = next_d();
    for (auto& v : rec.point.y) v = next_d();
    for (auto& v : rec.point.w) v = next_d();
    for (auto& v : rec.point.z) v = next_d();
    rec.tau = next_d();
    rec.pred = next_d();
    rec.ared = next_d();
    rec.comp = next_d();
    rec.F_norm = next_d();
    rec.delta = next_d();
    try {
      rec.p_exp = static_cast<int>(std::stol(next()));
    } catch (const std::exception&) {
      throw IoError("malformed exponent cell in line: " + line);
    }
    trace.push_back(std::move(rec));
  }
  return trace;
}

namespace {

PipaConfig config_from(const RunSpec& spec, const PipaConfig& base) {
  PipaConfig cfg = base;
  for (const auto& [name, value] : spec.overrides) {
    if (name == "c") cfg.c = value;
    else if (name == "sigma") cfg.sigma = value;
    else if (name == "gamma") cfg.gamma = value;
    else if (name == "rho") cfg.rho = value;
    else if (name == "alpha") cfg.alpha = value;
    else if (name == "eps-frac") cfg.eps_frac = value;
    else if (name == "eps-term") cfg.eps_term = value;
    else if (name == "max-iter") cfg.max_iter = static_cast<int>(value);
  }
  return cfg;
}

MpccProblem resolve_problem(const RunSpec& spec) {
  auto prob = problem_by_name(spec.problem);
  if (!prob) throw UsageError("unknown problem '" + spec.problem + "'");
  return *prob;
}

Point default_start(const MpccProblem& problem) {
  if (problem.name == "counterexample") return Point{{0.0}, {1.0}, {0.02}, {}};
  Point p;
  p.x.assign(problem.n_x, 0.0);
  for (std::size_t i = 0; i < problem.n_x; ++i)
    p.x[i] = 0.5 * (problem.x_lower[i] + problem.x_upper[i]);
  p.y.assign(problem.m, 1.0);
  p.w.assign(problem.m, 1.0);
  p.z.assign(problem.n_z, 0.0);
  return p;
}

void emit_trace(const RunSpec& spec, const std::vector<TraceRecord>& trace, std::ostream& out) {
  if (spec.out_path) {
    write_trace_file(trace, spec.format, *spec.out_path);
  } else {
    write_trace(trace, spec.format, out);
  }
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::ConvergedSmallStep: return "converged_small_step";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Error: return "error";
  }
  return "?";
}

int run_solver(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const MpccProblem problem = resolve_problem(spec);
  const Point start = default_start(problem);
  SolveResult result;
  if (spec.command == Command::RunPipa) {
    result = pipa_solve(problem, config_from(spec, PipaConfig{}), start);
  } else {
    TrConfig cfg = default_tr_config();
    cfg.base = config_from(spec, cfg.base);
    if (auto it = spec.overrides.find("delta0"); it != spec.overrides.end())
      cfg.delta0 = it->second;
    result = trpipa_solve(problem, cfg, start);
  }
  emit_trace(spec, result.trace, out);
  err << "status: " << status_name(result.status) << " after "
      << result.trace.size() - 1 << " steps";
  if (!result.message.empty()) err << " (" << result.message << ")";
  err << "\n";
  return result.status == SolveStatus::Error ? 3 : 0;
}

int run_verify_table(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const MpccProblem problem = resolve_problem(spec);
  PipaConfig cfg = config_from(spec, PipaConfig{});
  const SolveResult result = pipa_solve(problem, cfg, default_start(problem));
  if (result.status == SolveStatus::Error) {
    err << "solver error: " << result.message << "\n";
    return 3;
  }
  try {
    const ReferenceComparison cmp = compare_to_reference(result.trace);
    write_trace(result.trace, spec.format, out);
    out << cmp.note << "\n";
    out << "iterates within 1e-6: " << (cmp.iterates_ok ? "yes" : "NO") << "\n";
    out << "reduction columns at printed precision: " << (cmp.reductions_ok ? "yes" : "NO")
        << "\n";
    return cmp.iterates_ok && cmp.reductions_ok ? 0 : 1;
  } catch (const TraceTooShortError& e) {
    err << e.what() << "\n";
    return 1;
  }
}

int run_check_derivatives(const RunSpec& spec, std::ostream& out, std::ostream&) {
  const MpccProblem problem = resolve_problem(spec);
  std::mt19937 rng(20030922u);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Point p;
    p.x.resize(problem.n_x);
    for (std::size_t i = 0; i < problem.n_x; ++i) {
      const double lo = problem.x_lower[i], hi = problem.x_upper[i];
      p.x[i] = lo + (0.1 + 0.8 * unit(rng)) * (hi - lo);
    }
    p.y.resize(problem.m);
    p.w.resize(problem.m);
    for (std::size_t i = 0; i < problem.m; ++i) {
      p.y[i] = 0.1 + 1.9 * unit(rng);
      p.w[i] = 0.1 + 1.9 * unit(rng);
    }
    p.z.assign(problem.n_z, 0.0);
    for (std::size_t i = 0; i < problem.n_z; ++i) p.z[i] = -1.0 + 2.0 * unit(rng);
    worst = std::max(worst, check_derivatives(problem, p, 1e-6));
  }
  out << "max relative derivative error over 10 interior points: " << worst << "\n";
  return worst <= 1e-6 ? 0 : 1;
}

int run_verify_lemma(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const MpccProblem problem = resolve_problem(spec);
  PipaConfig cfg = config_from(spec, PipaConfig{});
  if (spec.overrides.find("max-iter") == spec.overrides.end()) cfg.max_iter = 50;
  if (spec.overrides.find("eps-term") == spec.overrides.end()) cfg.eps_term = 1e-300;
  const SolveResult result = pipa_solve(problem, cfg, default_start(problem));
  if (result.status == SolveStatus::Error) {
    err << "solver error: " << result.message << "\n";
    return 3;
  }
  const VerificationReport report = verify_lemma_bounds(result.trace);
  if (spec.format == TraceFormat::Csv) {
    if (spec.out_path) {
      std::ofstream f(*spec.out_path);
      if (!f) throw IoError("cannot open '" + *spec.out_path + "' for writing");
      f << report_to_csv(report);
      out << report_to_text(report);
    } else {
      out << report_to_csv(report);
      err << report_to_text(report); // keep stdout machine-readable
    }
  } else {
    out << report_to_text(report);
  }
  return report.all_passed() ? 0 : 1;
}

} // namespace

int run_command(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  switch (spec.command) {
    case Command::RunPipa:
    case Command::RunTrpipa:
      return run_solver(spec, out, err);
    case Command::VerifyTable:
      return run_verify_table(spec, out, err);
    case Command::CheckDerivatives:
      return run_check_derivatives(spec, out, err);
    case Command::VerifyLemma:
      return run_verify_lemma(spec, out, err);
  }
  return 3;
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    const RunSpec spec = parse_args(args);
    return run_command(spec, std::cout, std::cerr);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << usage_text();
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

} // namespace mpcclab
