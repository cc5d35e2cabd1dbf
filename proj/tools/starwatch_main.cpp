#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "starwatch/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"starwatch: fake-star campaign detection and analysis for GitHub-style event streams"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int threads = 0;
  bool plot_data = false;
  app.add_option("--config", config_path, "pipeline configuration file (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.add_option("--threads", threads, "cap on worker threads (0 = library default)");
  app.add_flag("--plot-data", plot_data, "also emit plot-data tables (measure, report)");

  const char* subcommands[] = {"ingest", "synth",   "detect", "campaigns", "evaluate",
                               "measure", "regress", "enrich", "report"};
  const char* descriptions[] = {
      "parse event files into the normalized store",
      "generate a synthetic scenario with ground truth",
      "run both fake-star detectors and write the merged ledger",
      "postprocess the ledger into campaign reports",
      "score detections against the synthetic ground truth",
      "prevalence series, duration CCDFs, activity clustering, name tokens",
      "build the monthly panel and fit the fixed-effects autoregression",
      "deletion-ratio and trending/package cross-reference lookups",
      "run summary totals",
  };
  for (std::size_t i = 0; i < std::size(subcommands); ++i) {
    app.add_subcommand(subcommands[i], descriptions[i])->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  starwatch::pipeline::PipelineConfig cfg;
  try {
    cfg = starwatch::pipeline::PipelineConfig::load(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  if (threads > 0) cfg.threads = threads;

  return starwatch::pipeline::run_command(app.get_subcommands().front()->get_name(), cfg, out_dir,
                                          plot_data);
}
