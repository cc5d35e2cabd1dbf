#include "starwatch/campaigns.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "starwatch/csv.hpp"

namespace starwatch::campaigns {

std::span<const LedgerEntry> FakeStarLedger::for_repo(std::uint32_t repo) const {
  const auto [lo, hi] = std::equal_range(
      entries.begin(), entries.end(), repo,
      [](const auto& a, const auto& b) {
        if constexpr (std::is_same_v<std::decay_t<decltype(a)>, LedgerEntry>) {
          return a.repo < b;
        } else {
          return a < b.repo;
        }
      });
  return {entries.data() + (lo - entries.begin()), static_cast<std::size_t>(hi - lo)};
}

namespace {

void sort_ledger(FakeStarLedger& ledger) {
  std::sort(ledger.entries.begin(), ledger.entries.end(),
            [](const LedgerEntry& a, const LedgerEntry& b) {
              return std::tie(a.repo, a.time, a.actor) < std::tie(b.repo, b.time, b.actor);
            });
}

}  // namespace

FakeStarLedger merge_detections(std::span<const lowactivity::LowActivityFlag> low,
                                std::span<const lockstep::FakeStar> lock) {
  std::unordered_map<std::uint64_t, LedgerEntry> by_pair;
  const auto key = [](std::uint32_t actor, std::uint32_t repo) {
    return (static_cast<std::uint64_t>(actor) << 32) | repo;
  };
  for (const auto& f : low) {
    auto& e = by_pair[key(f.actor, f.repo)];
    e.actor = f.actor;
    e.repo = f.repo;
    e.time = f.star_time;
    e.signatures |= kLowActivity;
  }
  for (const auto& s : lock) {
    auto& e = by_pair[key(s.actor, s.repo)];
    e.actor = s.actor;
    e.repo = s.repo;
    e.time = s.time;
    e.signatures |= kLockstep;
  }
  FakeStarLedger ledger;
  ledger.entries.reserve(by_pair.size());
  for (auto& [_, e] : by_pair) ledger.entries.push_back(e);
  sort_ledger(ledger);
  return ledger;
}

namespace {

std::optional<CampaignReport> check_repo(const FakeStarLedger& ledger,
                                         const events::EventStore& store, std::uint32_t repo,
                                         const CampaignThresholds& t) {
  const auto flagged = ledger.for_repo(repo);
  std::map<MonthKey, MonthStat> months;
  for (const auto& [month, total] : events::monthly_star_counts(store, repo)) {
    months[month].month = month;
    months[month].total = total;
  }
  std::int64_t fake_total = 0, star_total = 0;
  for (const LedgerEntry& e : flagged) {
    const MonthKey month = month_of(e.time);
    months[month].month = month;
    ++months[month].fake;
    ++fake_total;
  }

  CampaignReport report;
  report.repo = repo;
  for (const auto& [month, stat] : months) {
    report.months.push_back(stat);
    star_total += stat.total;
    const bool spike = stat.fake > t.spike_min_fake &&
                       static_cast<double>(stat.fake) > t.spike_min_frac * static_cast<double>(stat.total);
    if (spike) report.spike_months.push_back(month);
  }
  if (report.spike_months.empty() || star_total <= 0) return std::nullopt;
  report.all_time_fake_frac = static_cast<double>(fake_total) / static_cast<double>(star_total);
  if (!(report.all_time_fake_frac > t.alltime_min_frac)) return std::nullopt;

  const auto in_spike = [&](UtcSeconds time) {
    return std::binary_search(report.spike_months.begin(), report.spike_months.end(),
                              month_of(time));
  };
  std::unordered_set<std::uint32_t> accounts;
  if (t.implicate_all_spike_stargazers) {
    for (const auto idx : store.repo_stars(repo)) {
      const events::StarEvent& s = store.stars()[idx];
      if (in_spike(s.time)) accounts.insert(s.actor);
    }
  } else {
    for (const LedgerEntry& e : flagged) {
      if (in_spike(e.time)) accounts.insert(e.actor);
    }
  }
  report.accounts.assign(accounts.begin(), accounts.end());
  std::sort(report.accounts.begin(), report.accounts.end());
  return report;
}

std::vector<std::uint32_t> ledger_repos(const FakeStarLedger& ledger) {
  std::vector<std::uint32_t> repos;
  for (const LedgerEntry& e : ledger.entries) {
    if (repos.empty() || repos.back() != e.repo) repos.push_back(e.repo);
  }
  return repos;
}

std::vector<CampaignReport> detect_impl(const FakeStarLedger& ledger,
                                        const events::EventStore& store,
                                        const CampaignThresholds& thresholds, bool parallel) {
  const std::vector<std::uint32_t> repos = ledger_repos(ledger);
  std::vector<std::optional<CampaignReport>> slots(repos.size());
  if (parallel) {
    const auto n = static_cast<std::int64_t>(repos.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) slots[i] = check_repo(ledger, store, repos[i], thresholds);
  } else {
    for (std::size_t i = 0; i < repos.size(); ++i) slots[i] = check_repo(ledger, store, repos[i], thresholds);
  }
  std::vector<CampaignReport> reports;
  for (auto& slot : slots) {
    if (slot) reports.push_back(std::move(*slot));
  }
  return reports;
}

}  // namespace

std::vector<CampaignReport> detect_campaigns(const FakeStarLedger& ledger,
                                             const events::EventStore& store,
                                             const CampaignThresholds& thresholds) {
  return detect_impl(ledger, store, thresholds, true);
}

std::vector<CampaignReport> detect_campaigns_serial(const FakeStarLedger& ledger,
                                                    const events::EventStore& store,
                                                    const CampaignThresholds& thresholds) {
  return detect_impl(ledger, store, thresholds, false);
}

namespace {

std::string signatures_to_string(unsigned sigs) {
  std::string out;
  if (sigs & kLowActivity) out += "low_activity";
  if (sigs & kLockstep) {
    if (!out.empty()) out += ';';
    out += "lockstep";
  }
  return out;
}

}  // namespace

void write_ledger_csv(const events::EventStore& store, const FakeStarLedger& ledger,
                      std::ostream& out) {
  out << "actor_id,repo_id,timestamp,signatures\n";
  for (const LedgerEntry& e : ledger.entries) {
    out << store.actor_name(e.actor) << ',' << store.repo_name(e.repo) << ','
        << format_iso8601_utc(e.time) << ',' << signatures_to_string(e.signatures) << '\n';
  }
}

FakeStarLedger read_ledger_csv(const events::EventStore& store, const std::string& path) {
  FakeStarLedger ledger;
  csv::for_each_row(path, "actor_id,", [&](const std::vector<std::string>& row) {
    if (row.size() != 4) throw CorruptInputError("bad ledger row in " + path);
    const auto actor = store.find_actor(row[0]);
    const auto repo = store.find_repo(row[1]);
    const auto time = parse_iso8601_utc(row[2]);
    if (!actor || !repo || !time) {
      throw CorruptInputError("ledger row does not match the event store: " + row[0] + "," + row[1]);
    }
    unsigned sigs = 0;
    if (row[3].find("low_activity") != std::string::npos) sigs |= kLowActivity;
    if (row[3].find("lockstep") != std::string::npos) sigs |= kLockstep;
    ledger.entries.push_back(LedgerEntry{*actor, *repo, *time, sigs});
  });
  sort_ledger(ledger);
  return ledger;
}

void write_campaigns_jsonl(const events::EventStore& store,
                           std::span<const CampaignReport> reports, std::ostream& out) {
  for (const CampaignReport& r : reports) {
    nlohmann::json j;
    j["repo"] = store.repo_name(r.repo);
    auto& months = j["months"] = nlohmann::json::array();
    for (const MonthStat& m : r.months) {
      months.push_back({{"month", to_string(m.month)}, {"fake", m.fake}, {"total", m.total}});
    }
    auto& spikes = j["spike_months"] = nlohmann::json::array();
    for (const MonthKey& m : r.spike_months) spikes.push_back(to_string(m));
    j["all_time_fake_pct"] = r.all_time_fake_frac * 100.0;
    std::vector<std::string> accounts;
    accounts.reserve(r.accounts.size());
    for (const auto a : r.accounts) accounts.push_back(store.actor_name(a));
    std::sort(accounts.begin(), accounts.end());
    j["accounts"] = accounts;
    out << j.dump() << '\n';
  }
}

void write_campaign_summary_csv(const events::EventStore& store,
                                std::span<const CampaignReport> reports, std::ostream& out) {
  out << "repo,first_spike_month,n_spike_months,fake_total,all_time_fake_pct\n";
  for (const CampaignReport& r : reports) {
    std::int64_t fake_total = 0;
    for (const MonthStat& m : r.months) fake_total += m.fake;
    out << store.repo_name(r.repo) << ',' << to_string(r.spike_months.front()) << ','
        << r.spike_months.size() << ',' << fake_total << ',' << r.all_time_fake_frac * 100.0
        << '\n';
  }
}

}  // namespace starwatch::campaigns
