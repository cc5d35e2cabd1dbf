#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "starwatch/events.hpp"
#include "starwatch/lockstep.hpp"
#include "starwatch/lowactivity.hpp"

namespace starwatch::campaigns {

enum Signature : unsigned {
  kLowActivity = 1u << 0,
  kLockstep = 1u << 1,
};

struct LedgerEntry {
  std::uint32_t actor = 0;
  std::uint32_t repo = 0;
  UtcSeconds time = 0;
  unsigned signatures = 0;

  bool operator==(const LedgerEntry&) const = default;
};

// Union of both detectors' fake stars, one entry per (actor, repo); a star
// caught by both carries both signature bits.
struct FakeStarLedger {
  std::vector<LedgerEntry> entries;  // sorted by (repo, time, actor)

  std::span<const LedgerEntry> for_repo(std::uint32_t repo) const;
};

FakeStarLedger merge_detections(std::span<const lowactivity::LowActivityFlag> low,
                                std::span<const lockstep::FakeStar> lock);

struct CampaignThresholds {
  std::int64_t spike_min_fake = 50;   // strictly more than this many fakes in a month
  double spike_min_frac = 0.5;        // strictly more than this fake share in the month
  double alltime_min_frac = 0.10;     // strictly more than this fake share overall
  // When set, spike-month stargazers are implicated whether or not their own
  // star was flagged; default keeps only flagged stargazers.
  bool implicate_all_spike_stargazers = false;
};

struct MonthStat {
  MonthKey month;
  std::int64_t fake = 0;
  std::int64_t total = 0;
};

struct CampaignReport {
  std::uint32_t repo = 0;
  std::vector<MonthStat> months;        // months with any stars or flags
  std::vector<MonthKey> spike_months;
  double all_time_fake_frac = 0.0;      // fake / total stars over the window
  std::vector<std::uint32_t> accounts;  // implicated stargazers, sorted
};

std::vector<CampaignReport> detect_campaigns(const FakeStarLedger& ledger,
                                             const events::EventStore& store,
                                             const CampaignThresholds& thresholds = {});
std::vector<CampaignReport> detect_campaigns_serial(const FakeStarLedger& ledger,
                                                    const events::EventStore& store,
                                                    const CampaignThresholds& thresholds = {});

void write_ledger_csv(const events::EventStore& store, const FakeStarLedger& ledger,
                      std::ostream& out);
FakeStarLedger read_ledger_csv(const events::EventStore& store, const std::string& path);

void write_campaigns_jsonl(const events::EventStore& store,
                           std::span<const CampaignReport> reports, std::ostream& out);
void write_campaign_summary_csv(const events::EventStore& store,
                                std::span<const CampaignReport> reports, std::ostream& out);

}  // namespace starwatch::campaigns
