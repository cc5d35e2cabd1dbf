#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "starwatch/events.hpp"

namespace starwatch::lowactivity {

// One flagged throwaway account: its entire in-window history is a single
// star, plus at most one extra event on the same repository within the same
// UTC day.
struct LowActivityFlag {
  std::uint32_t actor = 0;
  std::uint32_t repo = 0;
  UtcSeconds star_time = 0;
  std::optional<std::uint32_t> extra_kind;  // kind id of the one extra event

  bool operator==(const LowActivityFlag&) const = default;
};

// OpenMP scan over per-account partitions; output ordered by actor id.
std::vector<LowActivityFlag> detect_low_activity(const events::EventStore& store);
// Single-threaded reference with identical output.
std::vector<LowActivityFlag> detect_low_activity_serial(const events::EventStore& store);

// Keeps flags whose repository accumulates at least `min_fake` flags.
std::vector<LowActivityFlag> filter_by_repo_threshold(std::vector<LowActivityFlag> flags,
                                                      std::int64_t min_fake = 50);

void write_flags_csv(const events::EventStore& store, std::span<const LowActivityFlag> flags,
                     std::ostream& out);

}  // namespace starwatch::lowactivity
