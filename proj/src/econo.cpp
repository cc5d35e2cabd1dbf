#include "starwatch/econo.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "starwatch/csv.hpp"

namespace starwatch::econo {

std::vector<PanelRow> build_panel(const events::EventStore& store,
                                  const campaigns::FakeStarLedger& ledger,
                                  std::span<const campaigns::CampaignReport> reports) {
  const std::int64_t window_last = month_of(store.window().end).index();
  std::vector<PanelRow> panel;

  for (const campaigns::CampaignReport& report : reports) {
    const std::uint32_t repo = report.repo;
    const auto repo_events = store.repo_events(repo);
    if (repo_events.empty()) continue;
    const std::int64_t first = month_of(store.events()[repo_events.front()].time).index();

    std::unordered_map<std::int64_t, std::int64_t> fake_by_month;
    for (const campaigns::LedgerEntry& e : ledger.for_repo(repo)) {
      ++fake_by_month[month_of(e.time).index()];
    }
    std::unordered_map<std::int64_t, std::int64_t> total_by_month;
    for (const auto& [month, count] : events::monthly_star_counts(store, repo)) {
      total_by_month[month.index()] = count;
    }

    // Owner events and the repo's flagged stargazers do not count as activity.
    const std::string& repo_name = store.repo_name(repo);
    const std::string owner(repo_name.substr(0, repo_name.find('/')));
    const auto owner_id = store.find_actor(owner);
    std::unordered_set<std::uint32_t> fake_actors;
    for (const campaigns::LedgerEntry& e : ledger.for_repo(repo)) fake_actors.insert(e.actor);

    std::unordered_map<std::int64_t, std::int64_t> activity_by_month;
    std::int64_t first_release = window_last + 1;
    for (const auto idx : repo_events) {
      const events::RawEvent& ev = store.events()[idx];
      const std::int64_t m = month_of(ev.time).index();
      if (store.kind_name(ev.kind) == "ReleaseEvent") first_release = std::min(first_release, m);
      if (owner_id && ev.actor == *owner_id) continue;
      if (fake_actors.contains(ev.actor)) continue;
      ++activity_by_month[m];
    }

    std::int64_t all_fake = 0, all_real = 0;
    for (std::int64_t m = first; m <= window_last; ++m) {
      PanelRow row;
      row.repo = repo;
      row.month = MonthKey::from_index(m);
      row.fake = fake_by_month.contains(m) ? fake_by_month[m] : 0;
      const std::int64_t total = total_by_month.contains(m) ? total_by_month[m] : 0;
      row.real = total - row.fake;
      all_fake += row.fake;
      all_real += row.real;
      row.all_fake = all_fake;
      row.all_real = all_real;
      row.age_months = m - first;
      row.release = m >= first_release;
      row.activity = activity_by_month.contains(m) ? activity_by_month[m] : 0;
      panel.push_back(row);
    }
  }
  return panel;
}

namespace {

struct Design {
  std::vector<std::string> names;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<int> repo_of, period_of;  // dense group indices per row
  int n_repos = 0, n_periods = 0;
};

double transform(double v, LogRule rule) {
  return rule == LogRule::Log1pCounts ? std::log1p(v) : v;
}

Design assemble(std::span<const PanelRow> panel, const RegressionSpec& spec) {
  const int k = spec.order;
  // (repo, month-index) lookup.
  std::unordered_map<std::uint64_t, const PanelRow*> cell;
  const auto key = [](std::uint32_t repo, std::int64_t m) {
    return (static_cast<std::uint64_t>(repo) << 32) ^ static_cast<std::uint64_t>(m + (1ll << 20));
  };
  for (const PanelRow& row : panel) cell[key(row.repo, row.month.index())] = &row;

  Design d;
  for (int j = 1; j <= k; ++j) d.names.push_back("real_t-" + std::to_string(j));
  d.names.push_back("all_real_t-" + std::to_string(k + 1));
  for (int j = 1; j <= k; ++j) d.names.push_back("fake_t-" + std::to_string(j));
  d.names.push_back("all_fake_t-" + std::to_string(k + 1));
  const auto p = static_cast<Eigen::Index>(d.names.size());

  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  std::unordered_map<std::uint32_t, int> repo_index;
  std::unordered_map<std::int64_t, int> period_index;
  for (const PanelRow& row : panel) {
    const std::int64_t t = row.month.index();
    std::vector<double> x;
    x.reserve(p);
    bool complete = true;
    const auto lag = [&](std::int64_t back) -> const PanelRow* {
      const auto it = cell.find(key(row.repo, t - back));
      return it == cell.end() ? nullptr : it->second;
    };
    for (int j = 1; j <= k && complete; ++j) {
      const PanelRow* l = lag(j);
      if (!l) complete = false;
      else x.push_back(transform(static_cast<double>(l->real), spec.log_rule));
    }
    if (const PanelRow* l = complete ? lag(k + 1) : nullptr; l) {
      x.push_back(transform(static_cast<double>(l->all_real), spec.log_rule));
    } else {
      complete = false;
    }
    for (int j = 1; j <= k && complete; ++j) {
      const PanelRow* l = lag(j);
      if (!l) complete = false;
      else x.push_back(transform(static_cast<double>(l->fake), spec.log_rule));
    }
    if (const PanelRow* l = complete ? lag(k + 1) : nullptr; l) {
      x.push_back(transform(static_cast<double>(l->all_fake), spec.log_rule));
    } else {
      complete = false;
    }
    if (!complete) continue;

    ys.push_back(transform(static_cast<double>(row.real), spec.log_rule));
    rows.push_back(std::move(x));
    if (!repo_index.contains(row.repo)) {
      const int next = static_cast<int>(repo_index.size());
      repo_index[row.repo] = next;
    }
    if (!period_index.contains(t)) {
      const int next = static_cast<int>(period_index.size());
      period_index[t] = next;
    }
    d.repo_of.push_back(repo_index[row.repo]);
    d.period_of.push_back(period_index[t]);
  }

  d.n_repos = static_cast<int>(repo_index.size());
  d.n_periods = static_cast<int>(period_index.size());
  d.x.resize(static_cast<Eigen::Index>(rows.size()), p);
  d.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.y(static_cast<Eigen::Index>(i)) = ys[i];
    for (Eigen::Index j = 0; j < p; ++j) d.x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  return d;
}

// Alternating per-repo / per-period demeaning until both group means vanish.
// Returns the largest residual group mean after the final pass.
double two_way_demean(Eigen::MatrixXd& m, const std::vector<int>& repo_of,
                      const std::vector<int>& period_of, int n_repos, int n_periods) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd group_sum;
  Eigen::VectorXd group_count;
  double worst = 0;
  for (int pass = 0; pass < 200; ++pass) {
    worst = 0;
    for (const auto* groups : {&repo_of, &period_of}) {
      const int n_groups = groups == &repo_of ? n_repos : n_periods;
      group_sum = Eigen::MatrixXd::Zero(n_groups, m.cols());
      group_count = Eigen::VectorXd::Zero(n_groups);
      for (Eigen::Index i = 0; i < n; ++i) {
        group_sum.row((*groups)[i]) += m.row(i);
        group_count((*groups)[i]) += 1.0;
      }
      for (int g = 0; g < n_groups; ++g) group_sum.row(g) /= group_count(g);
      for (Eigen::Index i = 0; i < n; ++i) m.row(i) -= group_sum.row((*groups)[i]);
      worst = std::max(worst, group_sum.cwiseAbs().maxCoeff());
    }
    if (worst < 1e-10) break;
  }

  // Verify directly on the final matrix.
  double residual = 0;
  for (const auto* groups : {&repo_of, &period_of}) {
    const int n_groups = groups == &repo_of ? n_repos : n_periods;
    group_sum = Eigen::MatrixXd::Zero(n_groups, m.cols());
    group_count = Eigen::VectorXd::Zero(n_groups);
    for (Eigen::Index i = 0; i < n; ++i) {
      group_sum.row((*groups)[i]) += m.row(i);
      group_count((*groups)[i]) += 1.0;
    }
    for (int g = 0; g < n_groups; ++g) {
      residual = std::max(residual, group_sum.row(g).cwiseAbs().maxCoeff() / group_count(g));
    }
  }
  return residual;
}

}  // namespace

FitResult fit_fixed_effects_ar(std::span<const PanelRow> panel, const RegressionSpec& spec) {
  if (spec.order < 1 || spec.order > 6) throw Error("autoregression order must be in [1, 6]");
  Design d = assemble(panel, spec);
  FitResult fit;
  fit.n_obs = d.x.rows();
  fit.n_repos = d.n_repos;
  fit.n_periods = d.n_periods;
  if (d.x.rows() == 0 || d.n_repos < 2) {
    throw Error("panel too small: need at least two repos and enough months for the lags");
  }

  // Demean y and X together so both live in the same within space.
  Eigen::MatrixXd all(d.x.rows(), d.x.cols() + 1);
  all.col(0) = d.y;
  all.rightCols(d.x.cols()) = d.x;
  fit.max_abs_group_mean = two_way_demean(all, d.repo_of, d.period_of, d.n_repos, d.n_periods);
  Eigen::VectorXd y = all.col(0);
  Eigen::MatrixXd x = all.rightCols(d.x.cols());

  // Constant-after-demeaning columns carry no within variation.
  std::vector<int> keep;
  const double tol = 1e-8 * std::sqrt(static_cast<double>(x.rows()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (x.col(j).norm() > tol) {
      keep.push_back(static_cast<int>(j));
    } else {
      fit.dropped.push_back(d.names[static_cast<std::size_t>(j)]);
    }
  }
  Eigen::MatrixXd xk(x.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) xk.col(static_cast<Eigen::Index>(j)) = x.col(keep[j]);

  // Rank-revealing QR; pivoted-out columns are dropped and reported.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xk);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank < xk.cols()) {
    const auto& perm = qr.colsPermutation().indices();
    std::vector<int> retained;
    for (Eigen::Index r = 0; r < rank; ++r) retained.push_back(keep[perm(r)]);
    std::sort(retained.begin(), retained.end());
    for (const int j : keep) {
      if (!std::binary_search(retained.begin(), retained.end(), j)) {
        fit.dropped.push_back(d.names[static_cast<std::size_t>(j)]);
      }
    }
    keep = std::move(retained);
    xk.resize(x.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) xk.col(static_cast<Eigen::Index>(j)) = x.col(keep[j]);
    qr.compute(xk);
  }
  if (keep.empty()) throw Error("no regressor with within variation remains");

  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd residuals = y - xk * beta;
  const double ssr = residuals.squaredNorm();
  const double tss = y.squaredNorm();  // y is demeaned, so this is total within variation
  fit.max_abs_xte = (xk.transpose() * residuals).cwiseAbs().maxCoeff();

  const auto n = static_cast<double>(xk.rows());
  const auto p = static_cast<double>(keep.size());
  // Degrees of freedom account for the absorbed repo and period effects.
  const double df = std::max(n - p - static_cast<double>(d.n_repos - 1) -
                                 static_cast<double>(d.n_periods - 1) - 1.0,
                             1.0);
  const double sigma2 = ssr / df;
  const Eigen::MatrixXd xtx_inv = (xk.transpose() * xk).inverse();

  for (std::size_t j = 0; j < keep.size(); ++j) {
    Term term;
    term.name = d.names[static_cast<std::size_t>(keep[j])];
    term.estimate = beta(static_cast<Eigen::Index>(j));
    term.std_error = std::sqrt(sigma2 * xtx_inv(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
    fit.terms.push_back(std::move(term));
  }
  fit.r_squared = tss > 0 ? 1.0 - ssr / tss : 0.0;
  fit.adj_r_squared = 1.0 - (1.0 - fit.r_squared) * (n - 1.0) / df;
  return fit;
}

void write_panel_csv(const events::EventStore& store, std::span<const PanelRow> panel,
                     std::ostream& out) {
  out << "repo,month,real,all_real,fake,all_fake,age,release,activity\n";
  for (const PanelRow& r : panel) {
    out << store.repo_name(r.repo) << ',' << to_string(r.month) << ',' << r.real << ','
        << r.all_real << ',' << r.fake << ',' << r.all_fake << ',' << r.age_months << ','
        << (r.release ? 1 : 0) << ',' << r.activity << '\n';
  }
}

std::vector<PanelRow> read_panel_csv(const std::string& path) {
  std::vector<PanelRow> panel;
  events::Interner repos;
  csv::for_each_row(path, "repo,", [&](const std::vector<std::string>& row) {
    if (row.size() != 9) throw CorruptInputError("bad panel row in " + path);
    PanelRow r;
    r.repo = repos.intern(row[0]);
    const auto month = parse_month_key(row[1]);
    if (!month) throw CorruptInputError("bad month in " + path + ": " + row[1]);
    r.month = *month;
    r.real = std::stoll(row[2]);
    r.all_real = std::stoll(row[3]);
    r.fake = std::stoll(row[4]);
    r.all_fake = std::stoll(row[5]);
    r.age_months = std::stoll(row[6]);
    r.release = row[7] == "1";
    r.activity = std::stoll(row[8]);
    panel.push_back(r);
  });
  return panel;
}

std::string format_fit_table(const FitResult& fit) {
  std::ostringstream out;
  out << "Dependent variable: real_t (two-way fixed effects)\n";
  out << "---------------------------------------------\n";
  char line[96];
  for (const Term& t : fit.terms) {
    std::snprintf(line, sizeof(line), "%-16s %10.4f  (%.4f)\n", t.name.c_str(), t.estimate,
                  t.std_error);
    out << line;
  }
  out << "---------------------------------------------\n";
  out << "observations     " << fit.n_obs << "\n";
  out << "repos            " << fit.n_repos << "\n";
  out << "periods          " << fit.n_periods << "\n";
  std::snprintf(line, sizeof(line), "R2               %.3f\n", fit.r_squared);
  out << line;
  std::snprintf(line, sizeof(line), "adjusted R2      %.3f\n", fit.adj_r_squared);
  out << line;
  if (!fit.dropped.empty()) {
    out << "dropped (rank-deficient):";
    for (const std::string& name : fit.dropped) out << ' ' << name;
    out << '\n';
  }
  return out.str();
}

}  // namespace starwatch::econo
