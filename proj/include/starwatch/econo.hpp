#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "starwatch/campaigns.hpp"
#include "starwatch/events.hpp"

namespace starwatch::econo {

// One repo-month of the autoregression panel. all_* are inclusive running
// totals; activity excludes the repository owner and the repo's flagged fake
// stargazers.
struct PanelRow {
  std::uint32_t repo = 0;
  MonthKey month;
  std::int64_t fake = 0;
  std::int64_t all_fake = 0;
  std::int64_t real = 0;
  std::int64_t all_real = 0;
  std::int64_t age_months = 0;  // months since the repo's first observed event
  bool release = false;         // true from the first month with a ReleaseEvent
  std::int64_t activity = 0;

  bool operator==(const PanelRow&) const = default;
};

// Monthly rows per campaign repo, from each repo's first observed month to
// the end of the window.
std::vector<PanelRow> build_panel(const events::EventStore& store,
                                  const campaigns::FakeStarLedger& ledger,
                                  std::span<const campaigns::CampaignReport> reports);

enum class LogRule {
  Log1pCounts,  // log(1+x) on the count variables
  None,         // use values as given (already-transformed inputs)
};

struct RegressionSpec {
  int order = 2;  // k in [1, 6]
  LogRule log_rule = LogRule::Log1pCounts;
};

struct Term {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
};

struct FitResult {
  std::vector<Term> terms;
  std::vector<std::string> dropped;  // rank-deficient columns, reported not hidden
  std::int64_t n_obs = 0;
  int n_repos = 0;
  int n_periods = 0;
  double r_squared = 0.0;      // within R^2
  double adj_r_squared = 0.0;
  // Numerical diagnostics of the solved system: largest per-repo/per-period
  // column mean left after demeaning, and largest |X_j . residual|.
  double max_abs_group_mean = 0.0;
  double max_abs_xte = 0.0;
};

// Two-way within estimator: demeans every variable per repo and per period
// (iterated to 1e-10), then ordinary least squares of real_t on k lags of
// real and fake plus all_real_{t-k-1} and all_fake_{t-k-1}. Rows missing a
// lag are dropped.
FitResult fit_fixed_effects_ar(std::span<const PanelRow> panel, const RegressionSpec& spec);

void write_panel_csv(const events::EventStore& store, std::span<const PanelRow> panel,
                     std::ostream& out);
std::vector<PanelRow> read_panel_csv(const std::string& path);

std::string format_fit_table(const FitResult& fit);

}  // namespace starwatch::econo
