#include "starwatch/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <unordered_set>

#include "starwatch/csv.hpp"
#include "starwatch/econo.hpp"
#include "starwatch/enrich.hpp"
#include "starwatch/measure.hpp"

namespace starwatch::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> known, const char* context) {
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(known.begin(), known.end(),
                     [&](const char* k) { return key == k; }) == known.end()) {
      throw ConfigError(std::string("unknown config key '") + key + "' in " + context);
    }
  }
}

UtcSeconds parse_instant(const json& j, const char* what) {
  if (!j.is_string()) throw ConfigError(std::string(what) + " must be an ISO-8601 UTC string");
  const auto t = parse_iso8601_utc(j.get_ref<const std::string&>());
  if (!t) throw ConfigError(std::string("cannot parse ") + what + ": " + j.get<std::string>());
  return *t;
}

template <typename T>
void maybe(const json& j, const char* key, T& into) {
  if (const auto it = j.find(key); it != j.end()) into = it->get<T>();
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
  check_keys(j,
             {"window", "inputs", "threads", "lockstep", "low_activity", "campaigns", "measure",
              "regress", "scenario", "enrich"},
             "config root");
  PipelineConfig cfg;
  if (!j.contains("window")) throw ConfigError("config needs a window");
  check_keys(j.at("window"), {"start", "end"}, "window");
  cfg.window.start = parse_instant(j.at("window").at("start"), "window.start");
  cfg.window.end = parse_instant(j.at("window").at("end"), "window.end");
  if (cfg.window.end < cfg.window.start) throw ConfigError("window ends before it starts");
  maybe(j, "inputs", cfg.inputs);
  maybe(j, "threads", cfg.threads);

  if (j.contains("lockstep")) {
    const json& l = j.at("lockstep");
    check_keys(l,
               {"min_accounts", "min_repos", "window_days", "coverage", "membership", "max_iters",
                "chunking"},
               "lockstep");
    maybe(l, "min_accounts", cfg.lockstep.min_accounts);
    maybe(l, "min_repos", cfg.lockstep.min_repos);
    maybe(l, "window_days", cfg.lockstep.window_days);
    maybe(l, "coverage", cfg.lockstep.coverage);
    maybe(l, "membership", cfg.lockstep.membership);
    maybe(l, "max_iters", cfg.lockstep.max_iters);
    maybe(l, "chunking", cfg.lockstep_chunking);
  }
  cfg.lockstep.validate();

  if (j.contains("low_activity")) {
    check_keys(j.at("low_activity"), {"min_fake"}, "low_activity");
    maybe(j.at("low_activity"), "min_fake", cfg.low_activity_min_fake);
    if (cfg.low_activity_min_fake < 1) throw ConfigError("low_activity.min_fake must be >= 1");
  }
  if (j.contains("campaigns")) {
    const json& c = j.at("campaigns");
    check_keys(c, {"spike_min_fake", "spike_min_frac", "alltime_min_frac",
                   "implicate_all_spike_stargazers"},
               "campaigns");
    maybe(c, "spike_min_fake", cfg.campaign.spike_min_fake);
    maybe(c, "spike_min_frac", cfg.campaign.spike_min_frac);
    maybe(c, "alltime_min_frac", cfg.campaign.alltime_min_frac);
    maybe(c, "implicate_all_spike_stargazers", cfg.campaign.implicate_all_spike_stargazers);
  }
  if (j.contains("measure")) {
    const json& m = j.at("measure");
    check_keys(m,
               {"kmeans_k_min", "kmeans_k_max", "kmeans_restarts", "kmeans_seed", "vector_classes",
                "popular_min_stars"},
               "measure");
    maybe(m, "kmeans_k_min", cfg.measure.kmeans_k_min);
    maybe(m, "kmeans_k_max", cfg.measure.kmeans_k_max);
    maybe(m, "kmeans_restarts", cfg.measure.kmeans_restarts);
    maybe(m, "kmeans_seed", cfg.measure.kmeans_seed);
    maybe(m, "vector_classes", cfg.measure.vector_classes);
    maybe(m, "popular_min_stars", cfg.measure.popular_min_stars);
    if (cfg.measure.vector_classes != 8 && cfg.measure.vector_classes != 5) {
      throw ConfigError("measure.vector_classes must be 8 or 5");
    }
  }
  if (j.contains("regress")) {
    const json& r = j.at("regress");
    check_keys(r, {"order", "log_transform"}, "regress");
    maybe(r, "order", cfg.regress.order);
    maybe(r, "log_transform", cfg.regress.log_transform);
    if (cfg.regress.order < 1 || cfg.regress.order > 6) {
      throw ConfigError("regress.order must be in [1, 6]");
    }
  }
  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    check_keys(s,
               {"n_accounts", "n_repos", "background_stars_per_day", "popularity_exponent",
                "rng_seed", "camouflage_stars_per_account", "extra_events_per_star", "injections"},
               "scenario");
    cfg.scenario.window = cfg.window;
    maybe(s, "n_accounts", cfg.scenario.n_accounts);
    maybe(s, "n_repos", cfg.scenario.n_repos);
    maybe(s, "background_stars_per_day", cfg.scenario.background_stars_per_day);
    maybe(s, "popularity_exponent", cfg.scenario.popularity_exponent);
    maybe(s, "rng_seed", cfg.scenario.rng_seed);
    maybe(s, "camouflage_stars_per_account", cfg.scenario.camouflage_stars_per_account);
    maybe(s, "extra_events_per_star", cfg.scenario.extra_events_per_star);
    if (s.contains("injections")) {
      for (const json& ij : s.at("injections")) {
        check_keys(ij,
                   {"n_fake_accounts", "n_target_repos", "burst_span_days", "stars_per_repo",
                    "organic_stars_per_repo", "delivery_span_days"},
                   "scenario.injections");
        synth::Injection inj;
        maybe(ij, "n_fake_accounts", inj.n_fake_accounts);
        maybe(ij, "n_target_repos", inj.n_target_repos);
        maybe(ij, "burst_span_days", inj.burst_span_days);
        maybe(ij, "stars_per_repo", inj.stars_per_repo);
        maybe(ij, "organic_stars_per_repo", inj.organic_stars_per_repo);
        maybe(ij, "delivery_span_days", inj.delivery_span_days);
        cfg.scenario.injections.push_back(inj);
      }
    }
  } else {
    cfg.scenario.window = cfg.window;
  }
  if (j.contains("enrich")) {
    const json& e = j.at("enrich");
    check_keys(e,
               {"provider", "repo_existence_fixture", "account_existence_fixture", "repo_baseline",
                "account_baseline", "trending_table", "package_table", "token_env"},
               "enrich");
    maybe(e, "provider", cfg.enrich.provider);
    maybe(e, "repo_existence_fixture", cfg.enrich.repo_existence_fixture);
    maybe(e, "account_existence_fixture", cfg.enrich.account_existence_fixture);
    maybe(e, "repo_baseline", cfg.enrich.repo_baseline);
    maybe(e, "account_baseline", cfg.enrich.account_baseline);
    maybe(e, "trending_table", cfg.enrich.trending_table);
    maybe(e, "package_table", cfg.enrich.package_table);
    maybe(e, "token_env", cfg.enrich.token_env);
    if (cfg.enrich.provider != "fixture" && cfg.enrich.provider != "live") {
      throw ConfigError("enrich.provider must be 'fixture' or 'live'");
    }
  }
  return cfg;
}

json PipelineConfig::to_json() const {
  json j;
  j["window"]["start"] = format_iso8601_utc(window.start);
  j["window"]["end"] = format_iso8601_utc(window.end);
  j["inputs"] = inputs;
  j["threads"] = threads;
  j["lockstep"] = {{"min_accounts", lockstep.min_accounts},
                   {"min_repos", lockstep.min_repos},
                   {"window_days", lockstep.window_days},
                   {"coverage", lockstep.coverage},
                   {"membership", lockstep.membership},
                   {"max_iters", lockstep.max_iters},
                   {"chunking", lockstep_chunking}};
  j["low_activity"] = {{"min_fake", low_activity_min_fake}};
  j["campaigns"] = {{"spike_min_fake", campaign.spike_min_fake},
                    {"spike_min_frac", campaign.spike_min_frac},
                    {"alltime_min_frac", campaign.alltime_min_frac},
                    {"implicate_all_spike_stargazers", campaign.implicate_all_spike_stargazers}};
  j["measure"] = {{"kmeans_k_min", measure.kmeans_k_min},
                  {"kmeans_k_max", measure.kmeans_k_max},
                  {"kmeans_restarts", measure.kmeans_restarts},
                  {"kmeans_seed", measure.kmeans_seed},
                  {"vector_classes", measure.vector_classes},
                  {"popular_min_stars", measure.popular_min_stars}};
  j["regress"] = {{"order", regress.order}, {"log_transform", regress.log_transform}};
  json injections = json::array();
  for (const synth::Injection& inj : scenario.injections) {
    injections.push_back({{"n_fake_accounts", inj.n_fake_accounts},
                          {"n_target_repos", inj.n_target_repos},
                          {"burst_span_days", inj.burst_span_days},
                          {"stars_per_repo", inj.stars_per_repo},
                          {"organic_stars_per_repo", inj.organic_stars_per_repo},
                          {"delivery_span_days", inj.delivery_span_days}});
  }
  j["scenario"] = {{"n_accounts", scenario.n_accounts},
                   {"n_repos", scenario.n_repos},
                   {"background_stars_per_day", scenario.background_stars_per_day},
                   {"popularity_exponent", scenario.popularity_exponent},
                   {"rng_seed", scenario.rng_seed},
                   {"camouflage_stars_per_account", scenario.camouflage_stars_per_account},
                   {"extra_events_per_star", scenario.extra_events_per_star},
                   {"injections", injections}};
  j["enrich"] = {{"provider", enrich.provider},
                 {"repo_existence_fixture", enrich.repo_existence_fixture},
                 {"account_existence_fixture", enrich.account_existence_fixture},
                 {"repo_baseline", enrich.repo_baseline},
                 {"account_baseline", enrich.account_baseline},
                 {"trending_table", enrich.trending_table},
                 {"package_table", enrich.package_table},
                 {"token_env", enrich.token_env}};
  return j;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
  PipelineConfig cfg = from_json(j);

  // Relative paths in a config file resolve against the config's directory.
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const auto anchor = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (base / p).string();
  };
  for (std::string& input : cfg.inputs) anchor(input);
  anchor(cfg.enrich.repo_existence_fixture);
  anchor(cfg.enrich.account_existence_fixture);
  anchor(cfg.enrich.repo_baseline);
  anchor(cfg.enrich.account_baseline);
  anchor(cfg.enrich.trending_table);
  anchor(cfg.enrich.package_table);
  return cfg;
}

namespace {

void apply_threads(const PipelineConfig& cfg) {
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
}

void ensure_out_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

void require_file(const fs::path& path, const char* producer) {
  if (!fs::exists(path)) {
    throw ConfigError("missing input " + path.string() + " (run `" + producer + "` first)");
  }
}

events::EventStore load_store(const PipelineConfig& cfg, const fs::path& out) {
  const fs::path path = out / "events.jsonl";
  require_file(path, "ingest or synth");
  return events::parse_event_file(path, cfg.window);
}

// Effective-config dump next to the artifacts; reloading it reproduces the run.
void dump_effective_config(const PipelineConfig& cfg, const fs::path& out) {
  auto f = open_out(out / "effective_config.json");
  f << cfg.to_json().dump(2) << '\n';
}

struct Detections {
  std::vector<lowactivity::LowActivityFlag> low_flags;  // after the repo filter
  lockstep::DetectionResult lockstep_result;
  campaigns::FakeStarLedger ledger;
};

Detections detect_all(const PipelineConfig& cfg, const events::EventStore& store) {
  Detections d;
  d.low_flags = lowactivity::filter_by_repo_threshold(lowactivity::detect_low_activity(store),
                                                      cfg.low_activity_min_fake);
  if (cfg.lockstep_chunking) {
    d.lockstep_result = lockstep::run_chunked_detection(store, cfg.lockstep);
  } else {
    const lockstep::StarGraph graph = lockstep::build_star_graph(store);
    d.lockstep_result = lockstep::run_lockstep_detection(graph, cfg.lockstep);
  }
  d.ledger = campaigns::merge_detections(d.low_flags, d.lockstep_result.fake_stars);
  return d;
}

std::vector<std::string> read_id_list(const std::string& path) {
  std::vector<std::string> ids;
  csv::for_each_row(path, "entity_id", [&](const std::vector<std::string>& row) {
    if (!row.empty() && !row[0].empty()) ids.push_back(row[0]);
  });
  return ids;
}

std::vector<std::string> campaign_repo_names(const events::EventStore& store,
                                             std::span<const campaigns::CampaignReport> reports) {
  std::vector<std::string> names;
  names.reserve(reports.size());
  for (const auto& r : reports) names.push_back(store.repo_name(r.repo));
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<std::string> campaign_account_names(const events::EventStore& store,
                                                std::span<const campaigns::CampaignReport> reports) {
  std::unordered_set<std::uint32_t> ids;
  for (const auto& r : reports) ids.insert(r.accounts.begin(), r.accounts.end());
  std::vector<std::string> names;
  names.reserve(ids.size());
  for (const auto id : ids) names.push_back(store.actor_name(id));
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

void run_ingest(const PipelineConfig& cfg, const fs::path& out) {
  apply_threads(cfg);
  if (cfg.inputs.empty()) throw ConfigError("ingest: config lists no input files");
  for (const std::string& input : cfg.inputs) require_file(input, "nothing; provide input files");
  ensure_out_dir(out);

  events::EventStoreBuilder combined(cfg.window);
  std::size_t malformed = 0;
  for (const std::string& input : cfg.inputs) {
    const events::EventStore part = events::parse_event_file(input, cfg.window);
    malformed += part.malformed_count();
    for (const events::RawEvent& ev : part.events()) {
      combined.add(part.actor_name(ev.actor), part.repo_name(ev.repo), part.kind_name(ev.kind),
                   ev.time);
    }
  }
  combined.note_malformed(malformed);
  const events::EventStore store = std::move(combined).build();

  auto f = open_out(out / "events.jsonl");
  events::write_event_stream(store, f);
  dump_effective_config(cfg, out);
  std::cerr << "ingest: " << store.events().size() << " events, " << store.stars().size()
            << " stars, " << store.malformed_count() << " malformed lines skipped\n";
}

void run_synth(const PipelineConfig& cfg, const fs::path& out) {
  apply_threads(cfg);
  ensure_out_dir(out);
  auto [store, truth] = synth::generate(cfg.scenario);

  auto f = open_out(out / "events.jsonl");
  events::write_event_stream(store, f);

  auto stars = open_out(out / "truth_stars.csv");
  stars << "actor_id,repo_id,timestamp\n";
  for (const auto& [actor, repo, time] : truth.stars) {
    stars << actor << ',' << repo << ',' << format_iso8601_utc(time) << '\n';
  }
  auto accounts = open_out(out / "truth_accounts.csv");
  accounts << "entity_id\n";
  for (const auto& a : truth.accounts) accounts << a << '\n';
  auto repos = open_out(out / "truth_repos.csv");
  repos << "entity_id\n";
  for (const auto& r : truth.repos) repos << r << '\n';

  dump_effective_config(cfg, out);
  std::cerr << "synth: " << store.events().size() << " events, " << truth.stars.size()
            << " injected stars across " << truth.repos.size() << " repos\n";
}

void run_detect(const PipelineConfig& cfg, const fs::path& out) {
  apply_threads(cfg);
  const events::EventStore store = load_store(cfg, out);
  const Detections d = detect_all(cfg, store);
  const lockstep::StarGraph graph = lockstep::build_star_graph(store);

  auto low = open_out(out / "low_activity.csv");
  lowactivity::write_flags_csv(store, d.low_flags, low);
  auto groups = open_out(out / "lockstep_groups.jsonl");
  lockstep::write_groups_jsonl(graph, d.lockstep_result.groups, groups);
  auto fake = open_out(out / "lockstep_fake_stars.csv");
  lockstep::write_fake_stars_csv(graph, d.lockstep_result.fake_stars, "lockstep", fake);
  auto ledger = open_out(out / "ledger.csv");
  campaigns::write_ledger_csv(store, d.ledger, ledger);

  std::cerr << "detect: " << d.low_flags.size() << " low-activity flags, "
            << d.lockstep_result.groups.size() << " lockstep groups, " << d.ledger.entries.size()
            << " ledger entries\n";
}

void run_campaigns(const PipelineConfig& cfg, const fs::path& out) {
  apply_threads(cfg);
  const events::EventStore store = load_store(cfg, out);
  require_file(out / "ledger.csv", "detect");
  const campaigns::FakeStarLedger ledger =
      campaigns::read_ledger_csv(store, (out / "ledger.csv").string());
  const std::vector<campaigns::CampaignReport> reports =
      campaigns::detect_campaigns(ledger, store, cfg.campaign);

  auto jsonl = open_out(out / "campaigns.jsonl");
  campaigns::write_campaigns_jsonl(store, reports, jsonl);
  auto summary = open_out(out / "campaigns_summary.csv");
  campaigns::write_campaign_summary_csv(store, reports, summary);
  std::cerr << "campaigns: " << reports.size() << " repositories\n";
}

namespace {

std::vector<campaigns::CampaignReport> load_campaigns(const PipelineConfig& cfg,
                                                      const events::EventStore& store,
                                                      const fs::path& out,
                                                      campaigns::FakeStarLedger& ledger) {
  require_file(out / "ledger.csv", "detect");
  ledger = campaigns::read_ledger_csv(store, (out / "ledger.csv").string());
  return campaigns::detect_campaigns(ledger, store, cfg.campaign);
}

}  // namespace

void run_evaluate(const PipelineConfig& cfg, const fs::path& out) {
  apply_threads(cfg);
  const events::EventStore store = load_store(cfg, out);
  require_file(out / "truth_stars.csv", "synth");
  campaigns::FakeStarLedger ledger;
  const auto reports = load_campaigns(cfg, store, out, ledger);

  synth::GroundTruth truth;
  csv::for_each_row((out / "truth_stars.csv").string(), "actor_id,",
                    [&](const std::vector<std::string>& row) {
                      if (row.size() != 3) throw CorruptInputError("bad truth_stars.csv row");
                      const auto t = parse_iso8601_utc(row[2]);
                      truth.stars.emplace_back(row[0], row[1], t ? *t : 0);
                    });
  truth.accounts = read_id_list((out / "truth_accounts.csv").string());
  truth.repos = read_id_list((out / "truth_repos.csv").string());

  std::vector<std::pair<std::string, std::string>> detected_stars;
  detected_stars.reserve(ledger.entries.size());
  for (const auto& e : ledger.entries) {
    detected_stars.emplace_back(store.actor_name(e.actor), store.repo_name(e.repo));
  }
  const synth::EvaluationReport report =
      synth::evaluate_detection(campaign_repo_names(store, reports),
                                campaign_account_names(store, reports), detected_stars, truth);

  auto f = open_out(out / "evaluation.csv");
  f << "class,true_positive,detected,truth,precision,recall\n";
  const auto row = [&](const char* name, const synth::SetScore& s) {
    f << name << ',' << s.true_positive << ',' << s.detected << ',' << s.truth << ',';
    if (s.precision) f << *s.precision;
    f << ',';
    if (s.recall) f << *s.recall;
    f << '\n';
  };
  row("repos", report.repos);
  row("accounts", report.accounts);
  row("stars", report.stars);
  std::cerr << "evaluate: repo recall "
            << (report.repos.recall ? std::to_string(*report.repos.recall) : "n/a") << "\n";
}

void run_measure(const PipelineConfig& cfg, const fs::path& out, bool plot_data) {
  apply_threads(cfg);
  const events::EventStore store = load_store(cfg, out);
  campaigns::FakeStarLedger ledger;
  const auto reports = load_campaigns(cfg, store, out, ledger);

  const auto rows =
      measure::prevalence_series(store, ledger, reports, cfg.measure.popular_min_stars);
  {
    auto f = open_out(out / "prevalence.csv");
    measure::write_prevalence_csv(rows, f);
  }

  // Activity-duration survival curves: campaign repos against the rest, and
  // lockstep-flagged accounts against other stargazers.
  std::unordered_set<std::uint32_t> campaign_repos;
  for (const auto& r : reports) campaign_repos.insert(r.repo);
  std::unordered_set<std::uint32_t> lockstep_accounts;
  for (const auto& e : ledger.entries) {
    if (e.signatures & campaigns::kLockstep) lockstep_accounts.insert(e.actor);
  }
  std::unordered_set<std::uint32_t> stargazers;
  for (const auto& s : store.stars()) stargazers.insert(s.actor);

  std::vector<double> campaign_repo_days, other_repo_days, lockstep_days, other_gazer_days;
  for (std::uint32_t repo = 0; repo < store.repo_count(); ++repo) {
    const auto days = static_cast<double>(events::repo_activity_duration_days(store, repo));
    (campaign_repos.contains(repo) ? campaign_repo_days : other_repo_days).push_back(days);
  }
  for (std::uint32_t actor = 0; actor < store.actor_count(); ++actor) {
    if (!stargazers.contains(actor)) continue;
    const auto days = static_cast<double>(events::actor_activity_duration_days(store, actor));
    (lockstep_accounts.contains(actor) ? lockstep_days : other_gazer_days).push_back(days);
  }
  const auto write_ccdf = [&](const char* file, const std::vector<double>& values) {
    auto f = open_out(out / file);
    if (values.empty()) {
      f << "value,survival\n";
      return;
    }
    measure::write_ccdf_csv(measure::make_ccdf(values), f);
  };
  if (plot_data) {
    write_ccdf("ccdf_campaign_repos.csv", campaign_repo_days);
    write_ccdf("ccdf_sample_repos.csv", other_repo_days);
    write_ccdf("ccdf_lockstep_accounts.csv", lockstep_days);
    write_ccdf("ccdf_sample_accounts.csv", other_gazer_days);
  }

  // Activity-type clustering over campaign accounts.
  std::unordered_set<std::uint32_t> campaign_account_set;
  for (const auto& r : reports) campaign_account_set.insert(r.accounts.begin(), r.accounts.end());
  std::vector<std::uint32_t> subjects(campaign_account_set.begin(), campaign_account_set.end());
  std::sort(subjects.begin(), subjects.end());
  const auto scheme = cfg.measure.vector_classes == 5 ? measure::VectorScheme::FiveClass
                                                      : measure::VectorScheme::EightClass;
  const auto vectors =
      measure::activity_vectors(store, measure::SubjectKind::Account, scheme, subjects);
  if (static_cast<int>(vectors.size()) >= cfg.measure.kmeans_k_min) {
    measure::KMeansOptions opts;
    opts.restarts = cfg.measure.kmeans_restarts;
    opts.seed = cfg.measure.kmeans_seed;
    const auto result = measure::kmeans_cluster(
        vectors, cfg.measure.kmeans_k_min,
        std::min<int>(cfg.measure.kmeans_k_max, static_cast<int>(vectors.size())), opts);
    auto f = open_out(out / "activity_clusters.csv");
    measure::write_cluster_csv(result, scheme, f);
  } else {
    auto f = open_out(out / "activity_clusters.csv");
    f << "cluster,size,share_pct\n";
  }

  // Token frequency over campaign repository names (name part, not owner).
  std::vector<std::string> names;
  names.reserve(reports.size());
  for (const auto& r : reports) {
    const std::string& full = store.repo_name(r.repo);
    const auto slash = full.find('/');
    names.push_back(slash == std::string::npos ? full : full.substr(slash + 1));
  }
  {
    auto f = open_out(out / "name_tokens.csv");
    measure::write_token_csv(measure::name_token_frequency(names), f);
  }
  std::cerr << "measure: " << rows.size() << " months, " << vectors.size()
            << " clustered accounts\n";
}

void run_regress(const PipelineConfig& cfg, const fs::path& out) {
  apply_threads(cfg);
  const events::EventStore store = load_store(cfg, out);
  campaigns::FakeStarLedger ledger;
  const auto reports = load_campaigns(cfg, store, out, ledger);

  const std::vector<econo::PanelRow> panel = econo::build_panel(store, ledger, reports);
  {
    auto f = open_out(out / "panel.csv");
    econo::write_panel_csv(store, panel, f);
  }
  econo::RegressionSpec spec;
  spec.order = cfg.regress.order;
  spec.log_rule = cfg.regress.log_transform ? econo::LogRule::Log1pCounts : econo::LogRule::None;
  const econo::FitResult fit = econo::fit_fixed_effects_ar(panel, spec);
  auto f = open_out(out / "regression.txt");
  f << econo::format_fit_table(fit);
  std::cerr << "regress: " << fit.n_obs << " observations, R2 " << fit.r_squared << "\n";
}

void run_enrich(const PipelineConfig& cfg, const fs::path& out) {
  apply_threads(cfg);
  const events::EventStore store = load_store(cfg, out);
  campaigns::FakeStarLedger ledger;
  const auto reports = load_campaigns(cfg, store, out, ledger);
  const std::vector<std::string> repos = campaign_repo_names(store, reports);
  const std::vector<std::string> accounts = campaign_account_names(store, reports);
  const EnrichConfig& e = cfg.enrich;
  if (e.repo_existence_fixture.empty() && e.account_existence_fixture.empty() &&
      e.trending_table.empty() && e.package_table.empty()) {
    throw ConfigError("enrich: no fixture tables configured");
  }

  const auto make_provider = [&](const std::string& fixture,
                                 enrich::EntityKind kind) -> std::unique_ptr<enrich::ExistenceProvider> {
    if (e.provider == "live") {
      enrich::LiveExistenceProvider::Options opts;
      opts.token_env = e.token_env;
      return std::make_unique<enrich::LiveExistenceProvider>(kind, opts);
    }
    require_file(fixture, "nothing; provide the fixture file");
    return std::make_unique<enrich::FixtureExistenceProvider>(enrich::read_existence_csv(fixture));
  };

  auto f = open_out(out / "deletion_ratio.csv");
  f << "entity_class,deleted,resolved,unknown,pct_deleted,baseline_deleted,baseline_resolved,"
       "baseline_unknown,pct_deleted_baseline\n";
  const auto row = [&](const char* name, const enrich::DeletionRatio& r) {
    f << name << ',' << r.detected_deleted << ',' << r.detected_resolved << ','
      << r.detected_unknown << ',';
    if (r.pct_deleted_detected) f << *r.pct_deleted_detected;
    f << ',' << r.baseline_deleted << ',' << r.baseline_resolved << ',' << r.baseline_unknown
      << ',';
    if (r.pct_deleted_baseline) f << *r.pct_deleted_baseline;
    f << '\n';
  };
  if (!e.repo_existence_fixture.empty() || e.provider == "live") {
    const auto provider = make_provider(e.repo_existence_fixture, enrich::EntityKind::Repo);
    std::vector<std::string> baseline;
    if (!e.repo_baseline.empty()) baseline = read_id_list(e.repo_baseline);
    row("repos", enrich::deletion_ratio(repos, *provider, baseline));
  }
  if (!e.account_existence_fixture.empty() || e.provider == "live") {
    const auto provider = make_provider(e.account_existence_fixture, enrich::EntityKind::Account);
    std::vector<std::string> baseline;
    if (!e.account_baseline.empty()) baseline = read_id_list(e.account_baseline);
    row("accounts", enrich::deletion_ratio(accounts, *provider, baseline));
  }

  if (!e.trending_table.empty()) {
    require_file(e.trending_table, "nothing; provide the trending table");
    const auto matches = enrich::cross_reference_trending(repos, enrich::read_trending_csv(e.trending_table));
    auto t = open_out(out / "trending_matches.csv");
    t << "repo_id\n";
    for (const auto& r : matches.matched_repos) t << r << '\n';
    auto m = open_out(out / "trending_monthly.csv");
    m << "month,matches\n";
    for (const auto& [month, count] : matches.monthly) m << to_string(month) << ',' << count << '\n';
  }
  if (!e.package_table.empty()) {
    require_file(e.package_table, "nothing; provide the package table");
    const auto matches = enrich::cross_reference_packages(repos, enrich::read_packages_csv(e.package_table));
    auto p = open_out(out / "package_matches.csv");
    p << "package,registry,repo_id\n";
    for (const auto& pkg : matches.matched_packages) {
      p << pkg.package << ',' << pkg.registry << ',' << pkg.repo << '\n';
    }
    auto r = open_out(out / "package_registries.csv");
    r << "registry,packages\n";
    for (const auto& [registry, count] : matches.per_registry) r << registry << ',' << count << '\n';
  }
  std::cerr << "enrich: done\n";
}

void run_report(const PipelineConfig& cfg, const fs::path& out, bool plot_data) {
  apply_threads(cfg);
  const events::EventStore store = load_store(cfg, out);
  campaigns::FakeStarLedger ledger;
  const auto reports = load_campaigns(cfg, store, out, ledger);

  std::int64_t low = 0, lock = 0, both = 0;
  std::unordered_set<std::uint32_t> flagged_repos;
  for (const auto& e : ledger.entries) {
    if (e.signatures & campaigns::kLowActivity) ++low;
    if (e.signatures & campaigns::kLockstep) ++lock;
    if ((e.signatures & campaigns::kLowActivity) && (e.signatures & campaigns::kLockstep)) ++both;
    flagged_repos.insert(e.repo);
  }
  std::unordered_set<std::uint32_t> campaign_accounts;
  std::int64_t campaign_fake_stars = 0;
  for (const auto& r : reports) {
    campaign_accounts.insert(r.accounts.begin(), r.accounts.end());
    for (const auto& e : ledger.for_repo(r.repo)) {
      (void)e;
      ++campaign_fake_stars;
    }
  }

  json j;
  j["events"] = store.events().size();
  j["accounts"] = store.actor_count();
  j["repos"] = store.repo_count();
  j["stars"] = store.stars().size();
  j["fake_stars"] = {{"total", ledger.entries.size()},
                     {"low_activity", low},
                     {"lockstep", lock},
                     {"both_signatures", both}};
  j["repos_with_fake_stars"] = flagged_repos.size();
  j["campaigns"] = {{"repos", reports.size()},
                    {"accounts", campaign_accounts.size()},
                    {"fake_stars", campaign_fake_stars}};
  {
    auto f = open_out(out / "report.json");
    f << j.dump(2) << '\n';
  }
  auto f = open_out(out / "report.txt");
  f << "events                      " << store.events().size() << '\n'
    << "accounts                    " << store.actor_count() << '\n'
    << "repositories                " << store.repo_count() << '\n'
    << "stars                       " << store.stars().size() << '\n'
    << "suspected fake stars        " << ledger.entries.size() << '\n'
    << "  low-activity signature    " << low << '\n'
    << "  lockstep signature        " << lock << '\n'
    << "  both signatures           " << both << '\n'
    << "repositories w/ fake stars  " << flagged_repos.size() << '\n'
    << "campaign repositories       " << reports.size() << '\n'
    << "campaign accounts           " << campaign_accounts.size() << '\n'
    << "campaign fake stars         " << campaign_fake_stars << '\n';

  if (plot_data) {
    const auto rows =
        measure::prevalence_series(store, ledger, reports, cfg.measure.popular_min_stars);
    auto p = open_out(out / "prevalence.csv");
    measure::write_prevalence_csv(rows, p);
  }
  std::cerr << "report: " << reports.size() << " campaign repositories\n";
}

int run_command(const std::string& name, const PipelineConfig& cfg, const fs::path& out,
                bool plot_data) {
  try {
    if (name == "ingest") run_ingest(cfg, out);
    else if (name == "synth") run_synth(cfg, out);
    else if (name == "detect") run_detect(cfg, out);
    else if (name == "campaigns") run_campaigns(cfg, out);
    else if (name == "evaluate") run_evaluate(cfg, out);
    else if (name == "measure") run_measure(cfg, out, plot_data);
    else if (name == "regress") run_regress(cfg, out);
    else if (name == "enrich") run_enrich(cfg, out);
    else if (name == "report") run_report(cfg, out, plot_data);
    else {
      std::cerr << "unknown subcommand: " << name << '\n';
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace starwatch::pipeline
