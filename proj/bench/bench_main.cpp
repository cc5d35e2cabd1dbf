// Times the OpenMP kernels against their serial reference implementations on
// a generated scenario and checks that both sides agree.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "starwatch/campaigns.hpp"
#include "starwatch/lockstep.hpp"
#include "starwatch/lowactivity.hpp"
#include "starwatch/measure.hpp"
#include "starwatch/synth.hpp"

using namespace starwatch;

namespace {

double time_ms(const std::function<void()>& fn) {
  const auto begin = std::chrono::steady_clock::now();
  fn();
  const auto end = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(end - begin).count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
  std::printf("%-24s serial %9.1f ms   parallel %9.1f ms   speedup %5.2fx   %s\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms, equal ? "outputs equal" : "OUTPUTS DIFFER");
}

}  // namespace

int main() {
  synth::ScenarioConfig scenario;
  scenario.n_accounts = 4000;
  scenario.n_repos = 8000;
  scenario.background_stars_per_day = 400;
  scenario.popularity_exponent = 0.3;
  scenario.extra_events_per_star = 0.5;
  scenario.window.start = *parse_iso8601_utc("2024-01-01T00:00:00Z");
  scenario.window.end = *parse_iso8601_utc("2024-12-31T23:59:59Z");
  scenario.rng_seed = 7;
  for (int i = 0; i < 6; ++i) {
    scenario.injections.push_back(synth::Injection{60, 12, 10.0, 60});
  }

  const auto [store, truth] = synth::generate(scenario);
  std::printf("scenario: %zu events, %zu stars, %zu accounts, %zu repos, %d threads\n",
              store.events().size(), store.stars().size(), store.actor_count(), store.repo_count(),
              omp_get_max_threads());

  {
    std::vector<lowactivity::LowActivityFlag> serial_out, parallel_out;
    const double s = time_ms([&] { serial_out = lowactivity::detect_low_activity_serial(store); });
    const double p = time_ms([&] { parallel_out = lowactivity::detect_low_activity(store); });
    report("low-activity scan", s, p, serial_out == parallel_out);
  }

  const lockstep::StarGraph graph = lockstep::build_star_graph(store);
  lockstep::LockstepParams params;
  {
    lockstep::DetectionResult serial_out, parallel_out;
    const double s = time_ms([&] { serial_out = lockstep::run_lockstep_detection_serial(graph, params); });
    const double p = time_ms([&] { parallel_out = lockstep::run_lockstep_detection(graph, params); });
    report("lockstep detection", s, p, serial_out.fake_stars == parallel_out.fake_stars &&
                                           serial_out.groups.size() == parallel_out.groups.size());
  }

  {
    const auto ledger = campaigns::merge_detections(
        lowactivity::filter_by_repo_threshold(lowactivity::detect_low_activity(store)),
        lockstep::run_lockstep_detection(graph, params).fake_stars);
    std::vector<campaigns::CampaignReport> serial_out, parallel_out;
    const double s = time_ms([&] { serial_out = campaigns::detect_campaigns_serial(ledger, store); });
    const double p = time_ms([&] { parallel_out = campaigns::detect_campaigns(ledger, store); });
    bool equal = serial_out.size() == parallel_out.size();
    for (std::size_t i = 0; equal && i < serial_out.size(); ++i) {
      equal = serial_out[i].repo == parallel_out[i].repo &&
              serial_out[i].accounts == parallel_out[i].accounts;
    }
    report("campaign postprocess", s, p, equal);
  }

  {
    std::vector<std::uint32_t> subjects(store.actor_count());
    for (std::uint32_t i = 0; i < subjects.size(); ++i) subjects[i] = i;
    const auto vectors = measure::activity_vectors(store, measure::SubjectKind::Account,
                                                   measure::VectorScheme::EightClass, subjects);
    measure::KMeansOptions opts;
    opts.restarts = 16;
    measure::ClusterResult serial_out, parallel_out;
    const double s = time_ms([&] { serial_out = measure::kmeans_fixed_k_serial(vectors, 4, opts); });
    const double p = time_ms([&] { parallel_out = measure::kmeans_fixed_k(vectors, 4, opts); });
    report("k-means (16 restarts)", s, p,
           serial_out.objective == parallel_out.objective &&
               serial_out.assignments == parallel_out.assignments);
  }
  return 0;
}
