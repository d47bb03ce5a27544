#include "mpcclab/trpipa.hpp"

#include "driver.hpp"

namespace mpcclab {

TrConfig default_tr_config() {
  TrConfig cfg;
  cfg.base.eps_term = 1e-9;
  return cfg;
}

void validate_tr_config(const TrConfig& cfg) {
  validate_config(cfg.base);
  if (!(cfg.gamma0 > 0.0 && cfg.gamma0 <= cfg.gamma1 && cfg.gamma1 < 1.0)) {
    throw Error("need 0 < gamma0 <= gamma1 < 1");
  }
  if (!(cfg.gamma2 >= 1.0)) throw Error("need gamma2 >= 1");
  if (!(cfg.eta1 > 0.0 && cfg.eta1 < cfg.eta2 && cfg.eta2 < 1.0)) {
    throw Error("need 0 < eta1 < eta2 < 1");
  }
  if (!(cfg.delta0 > 0.0)) throw Error("delta0 must be positive");
  if (!(cfg.delta_min > 0.0)) throw Error("delta_min must be positive");
}

double tr_ratio(double ared_signed, double pred) { return ared_signed / pred; }

double tr_update(double delta, double rho_k, const TrConfig& cfg) {
  if (rho_k < cfg.eta1) return cfg.gamma1 * delta;
  if (rho_k < cfg.eta2) return delta;
  return cfg.gamma2 * delta;
}

SolveResult trpipa_solve(const MpccProblem& problem, const TrConfig& cfg, const Point& start) {
  return detail::run_penalty_interior_point(problem, cfg.base, start, &cfg);
}

} // namespace mpcclab
