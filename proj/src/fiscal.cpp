#include "lcm/fiscal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lcm {

namespace {

void require_fraction(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw ModelError(std::string("fiscal.") + name + " must lie in [0,1]");
}

void require_nonneg(double v, const char* name) {
  if (!(v >= 0.0)) throw ModelError(std::string("fiscal.") + name + " must be >= 0");
}

double progressive_tax(double gross, const std::vector<TaxBracket>& brackets) {
  double due = 0.0;
  for (std::size_t i = 0; i < brackets.size(); ++i) {
    const double lo = brackets[i].threshold;
    if (gross <= lo) break;
    const double hi = i + 1 < brackets.size() ? brackets[i + 1].threshold : gross;
    due += brackets[i].rate * (std::min(gross, hi) - lo);
  }
  return due;
}

}  // namespace

void validate(const FiscalRules& r) {
  require_fraction(r.ss_contribution_rate, "ss_contribution_rate");
  require_fraction(r.er_replacement_rate, "er_replacement_rate");
  require_fraction(r.er_cap_fraction, "er_cap_fraction");
  require_fraction(r.accrual_employed, "accrual_employed");
  require_fraction(r.accrual_unemployed, "accrual_unemployed");
  require_fraction(r.flat_tax_rate, "flat_tax_rate");
  require_nonneg(r.basic_ui_benefit, "basic_ui_benefit");
  require_nonneg(r.guarantee_pension, "guarantee_pension");
  require_nonneg(r.net_floor, "net_floor");
  require_nonneg(r.ubi_amount, "ubi_amount");
  if (r.tax_brackets.empty()) throw ModelError("fiscal.tax_brackets must not be empty");
  for (std::size_t i = 0; i < r.tax_brackets.size(); ++i) {
    require_fraction(r.tax_brackets[i].rate, "tax_brackets.rate");
    if (i > 0 && !(r.tax_brackets[i].threshold > r.tax_brackets[i - 1].threshold))
      throw ModelError("fiscal.tax_brackets thresholds must be strictly increasing");
  }
}

TaxDue tax(double gross, bool is_wage, const FiscalRules& rules) {
  if (!(gross >= 0.0)) throw ModelError("tax: negative gross income " + std::to_string(gross));
  TaxDue due;
  due.social_security = is_wage ? rules.ss_contribution_rate * gross : 0.0;
  due.tax = rules.ubi_enabled ? rules.flat_tax_rate * gross : progressive_tax(gross, rules.tax_brackets);
  return due;
}

double unemployment_benefit(double prev_wage, int time_in_state, const FiscalRules& rules) {
  const double basic = rules.basic_ui_benefit;
  double benefit = basic;
  if (time_in_state == 0 && prev_wage > 0.0) {
    const double earnings_related = basic + rules.er_replacement_rate * std::max(0.0, prev_wage - basic);
    benefit = std::min(earnings_related, rules.er_cap_fraction * prev_wage);
  }
  if (rules.ubi_enabled) {
    // basic income replaces the flat part; only the earnings-related excess remains
    return std::max(0.0, benefit - basic);
  }
  return benefit;
}

double pension_benefit(double pension_accrued, const FiscalRules& rules) {
  if (!(pension_accrued >= 0.0)) throw ModelError("pension_benefit: negative accrued pension");
  if (rules.ubi_enabled)
    return std::max(pension_accrued, std::max(0.0, rules.guarantee_pension - rules.ubi_amount));
  return std::max(pension_accrued, rules.guarantee_pension);
}

double accrue_pension(const AgentState& during, const FiscalRules& rules) {
  switch (during.employment) {
    case Employment::Employed:
      return rules.accrual_employed * during.wage;
    case Employment::Unemployed:
      return during.time_in_state == 0 ? rules.accrual_unemployed * during.prev_wage : 0.0;
    case Employment::Retired:
      return 0.0;
  }
  return 0.0;
}

double net_income(const AgentState& during, const FiscalRules& rules) {
  double gross = 0.0;
  bool is_wage = false;
  switch (during.employment) {
    case Employment::Employed:
      gross = during.wage;
      is_wage = true;
      break;
    case Employment::Unemployed:
      gross = unemployment_benefit(during.prev_wage, during.time_in_state, rules);
      break;
    case Employment::Retired:
      gross = pension_benefit(during.pension, rules);
      break;
  }
  const TaxDue due = tax(gross, is_wage, rules);
  double net = gross - due.tax - due.social_security;
  if (rules.ubi_enabled)
    net += rules.ubi_amount;
  else
    net = std::max(net, rules.net_floor);
  if (!(net > 0.0) || !std::isfinite(net))
    throw ModelError("net_income: non-positive net income " + std::to_string(net) + " for " +
                     to_string(during.employment) + " state; check fiscal rules");
  return net;
}

}  // namespace lcm
