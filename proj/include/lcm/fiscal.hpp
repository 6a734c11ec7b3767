#pragma once

// Gross-to-net income under the baseline benefit/tax rules and the basic-income
// reform, plus pension accrual. The baseline table is a parameterized stand-in
// for the statutory scheme.

#include <utility>
#include <vector>

#include "lcm/model.hpp"

namespace lcm {

struct TaxBracket {
  double threshold = 0.0;  // e/y, rate applies above this
  double rate = 0.0;
};

struct FiscalRules {
  double ss_contribution_rate = 0.08;
  std::vector<TaxBracket> tax_brackets{{0.0, 0.0}, {12000.0, 0.20}, {30000.0, 0.35}, {60000.0, 0.45}};
  double basic_ui_benefit = 8400.0;
  double er_replacement_rate = 0.45;
  double er_cap_fraction = 0.90;
  double guarantee_pension = 8000.0;
  double net_floor = 7200.0;
  double accrual_employed = 0.015;
  double accrual_unemployed = 0.01125;
  bool ubi_enabled = false;
  double ubi_amount = 6000.0;
  double flat_tax_rate = 0.40;
};

void validate(const FiscalRules& r);

struct TaxDue {
  double tax = 0.0;
  double social_security = 0.0;
};

TaxDue tax(double gross, bool is_wage, const FiscalRules& rules);
double unemployment_benefit(double prev_wage, int time_in_state, const FiscalRules& rules);
double pension_benefit(double pension_accrued, const FiscalRules& rules);
// Pension increment earned over a year spent in state `during` (not Retired).
double accrue_pension(const AgentState& during, const FiscalRules& rules);
// Net income for a year spent in state `during`. Throws if the result is not positive.
double net_income(const AgentState& during, const FiscalRules& rules);

}  // namespace lcm
