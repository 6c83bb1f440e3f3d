// txreid command line: synthetic data generation, feature ingestion, model
// fitting, probe/gallery ranking, and the full cross-validated evaluation
// protocol. Diagnostics go to stderr; data goes only to the declared output
// files. Exit codes: 0 success, 1 data/numerical error, 2 usage error.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "txreid/config.hpp"
#include "txreid/errors.hpp"
#include "txreid/eval.hpp"
#include "txreid/matching.hpp"
#include "txreid/model_io.hpp"
#include "txreid/txqda.hpp"
#include "txreid/version.hpp"

namespace {

using namespace txreid;

std::optional<int> parse_target_dim(const std::string& s, const std::string& flag) {
  if (s == "auto") return std::nullopt;
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
    throw UsageError(flag + " must be 'auto', 'keep', or a positive integer");
  }
  return v;
}

struct SynthOptions {
  int ids = 50;
  int dim = 40;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out_a, out_b;
  std::string format = "csv";
};

void run_synth(const SynthOptions& o) {
  const auto [a, b] = synth_dataset(o.ids, o.dim, o.noise, o.seed);
  const FeatureFormat fmt = parse_feature_format(o.format);
  save_features(a, o.out_a, fmt);
  save_features(b, o.out_b, fmt);
  std::cerr << "synth: wrote " << a.records.size() << " records per view to " << o.out_a << " and "
            << o.out_b << "\n";
}

struct IngestOptions {
  std::string features;
  std::string format = "csv";
  std::string view = "A";
  int part_len = 0;
  std::string out;
  std::string stats;
};

void run_ingest(const IngestOptions& o) {
  const FeatureFormat fmt = parse_feature_format(o.format);
  const std::string tag = std::filesystem::path(o.features).stem().string();
  const FeatureSet fs = load_features(o.features, fmt, tag);
  View view;
  try {
    view = parse_view(o.view);
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
  const ViewTensor vt = split_to_tensor(fs, view, o.part_len);
  save_view_tensor(vt, o.out);

  if (!o.stats.empty()) {
    nlohmann::ordered_json j;
    j["descriptor"] = tag;
    j["records"] = fs.records.size();
    j["dim"] = fs.dim;
    j["view_counts"] = {{"A", fs.count(View::A)}, {"B", fs.count(View::B)}};
    const std::set<int> ids(vt.labels.begin(), vt.labels.end());
    j["tensor"] = {{"view", std::string(1, view_tag(view))},
                   {"parts", vt.parts()},
                   {"part_len", vt.part_len()},
                   {"persons", vt.persons()},
                   {"identities", ids.size()}};
    std::ofstream out(o.stats, std::ios::binary);
    if (!out) throw FormatError("cannot write stats file: " + o.stats);
    out << j.dump(2) << '\n';
  }
  std::cerr << "ingest: " << vt.persons() << " slices of " << vt.parts() << "x" << vt.part_len()
            << " written to " << o.out << "\n";
}

struct FitOptions {
  std::string file_a, file_b;
  std::string format = "csv";
  int part_len = 0;
  std::string dim1 = "keep";
  std::string dim2 = "auto";
  int max_itr = 5;
  double epsilon = 1e-6;
  double lambda = 1e-3;
  std::string alignment = "aligned";
  std::string out;
  std::string summary;
};

void run_fit(const FitOptions& o) {
  const FeatureFormat fmt = parse_feature_format(o.format);
  const FeatureSet fa = load_features(o.file_a, fmt, "a");
  const FeatureSet fb = load_features(o.file_b, fmt, "b");
  const ViewTensor ta = split_to_tensor(fa, View::A, o.part_len);
  const ViewTensor tb = split_to_tensor(fb, View::B, o.part_len);

  TxqdaConfig cfg;
  cfg.target_dim1 = (o.dim1 == "keep") ? std::optional<int>(static_cast<int>(ta.parts()))
                                       : parse_target_dim(o.dim1, "--dim1");
  cfg.target_dim2 = (o.dim2 == "keep") ? std::optional<int>(static_cast<int>(ta.part_len()))
                                       : parse_target_dim(o.dim2, "--dim2");
  cfg.max_itr = o.max_itr;
  cfg.epsilon = o.epsilon;
  cfg.lambda = o.lambda;
  cfg.alignment = parse_alignment(o.alignment);

  const TxqdaModel model = fit(ta, tb, cfg);
  save_model(model, o.out);
  if (!o.summary.empty()) {
    std::ofstream out(o.summary, std::ios::binary);
    if (!out) throw FormatError("cannot write summary file: " + o.summary);
    out << model_summary(model).dump(2) << '\n';
  }
  std::cerr << "fit: " << model.source_dim(1) << "x" << model.source_dim(2) << " -> "
            << model.target_dim(1) << "x" << model.target_dim(2) << ", "
            << model.iterations_run << " sweep(s), "
            << (model.converged ? "converged" : "not converged") << "; model written to " << o.out
            << "\n";
}

struct RankOptions {
  std::string model;
  std::string probe, gallery;
  std::string format = "csv";
  std::string probe_view = "A";
  std::string gallery_view = "B";
  std::string normalize = "minmax";
  std::string out;
  std::string rankings;
  int threads = 1;
};

void run_rank(const RankOptions& o) {
  const TxqdaModel model = load_model(o.model);
  const FeatureFormat fmt = parse_feature_format(o.format);
  const Index part_len = model.source_dim(2);
  const Index parts = model.source_dim(1);

  auto load_side = [&](const std::string& path, const std::string& view_str) {
    View view;
    try {
      view = parse_view(view_str);
    } catch (const FormatError& e) {
      throw UsageError(e.what());
    }
    const FeatureSet fs = load_features(path, fmt, std::filesystem::path(path).stem().string());
    const ViewTensor vt = split_to_tensor(fs, view, part_len);
    if (vt.parts() != parts) {
      throw UsageError("rank: feature dimension " + std::to_string(fs.dim) + " in " + path +
                       " is incompatible with the model (" + std::to_string(parts) + " parts of " +
                       std::to_string(part_len) + ")");
    }
    return vt;
  };

  const ViewTensor probes = load_side(o.probe, o.probe_view);
  const ViewTensor gallery = load_side(o.gallery, o.gallery_view);
  DistanceMatrix d = distance_matrix(probes, gallery, model, o.threads);
  d = normalize_scores(d, parse_normalization(o.normalize));
  write_distance_csv(d, o.out);

  if (!o.rankings.empty()) {
    const auto ranks = rank_gallery(d);
    std::ofstream out(o.rankings, std::ios::binary);
    if (!out) throw FormatError("cannot write rankings file: " + o.rankings);
    out << "probe,ranked_gallery_labels\n";
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      out << d.probe_labels[i];
      for (int gi : ranks[i]) out << ',' << d.gallery_labels[static_cast<std::size_t>(gi)];
      out << '\n';
    }
  }
  std::cerr << "rank: " << d.values.rows() << " probes x " << d.values.cols()
            << " gallery written to " << o.out << "\n";
}

struct EvalOptions {
  std::string config;
  std::string out;
  std::string curves_dir;
  bool dry_run = false;
  bool no_timestamp = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> folds;
  std::optional<std::string> normalization;
};

void run_eval(const EvalOptions& o) {
  ExperimentConfig cfg = parse_experiment_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.folds) cfg.folds = *o.folds;
  if (o.normalization) cfg.normalization = parse_normalization(*o.normalization);

  if (o.dry_run) {
    const ViewTensor a = detail::load_fused_view(cfg, View::A);
    const FoldPlan plan = kfold_split(a.labels, cfg.folds, cfg.seed);
    std::cerr << "dry run: " << a.persons() << " persons, fused tensor " << a.parts() << "x"
              << a.part_len() << "x" << a.persons() << "\n";
    std::cerr << "dim sweep:";
    for (int d : cfg.dim_sweep) std::cerr << ' ' << d;
    std::cerr << "\nfolds (" << plan.k << "):\n";
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      std::cerr << "  fold " << f << ":";
      for (int id : plan.folds[f]) std::cerr << ' ' << id;
      std::cerr << "\n";
    }
    std::cerr << "cells: " << cfg.dim_sweep.size() * static_cast<std::size_t>(cfg.folds) << "\n";
    return;
  }

  const std::size_t total = cfg.dim_sweep.size() * static_cast<std::size_t>(cfg.folds);
  std::size_t done = 0;
  int failed = 0;
  const auto progress = [&](const CellResult& c) {
    ++done;
    std::cerr << "eval: [" << done << "/" << total << "] dim=" << c.dim << " fold=" << c.fold;
    if (c.ok) {
      std::cerr << " rank-1=" << c.curve.rates.front() << "\n";
    } else {
      ++failed;
      std::cerr << " failed: " << c.error << "\n";
    }
  };
  const ExperimentReport report = run_experiment(cfg, progress);
  write_report(report, o.out, !o.no_timestamp);
  if (!o.curves_dir.empty()) {
    std::filesystem::create_directories(o.curves_dir);
    for (const auto& s : report.summaries) {
      if (s.folds_used == 0) continue;
      write_curve_csv(s.mean_curve,
                      (std::filesystem::path(o.curves_dir) /
                       ("cmc_dim" + std::to_string(s.dim) + "_mean.csv")).string());
    }
  }
  std::cerr << "eval: " << report.cells.size() - static_cast<std::size_t>(failed) << "/"
            << report.cells.size() << " cells ok; report written to " << o.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(txreid::kToolName) + " " + txreid::kToolVersion +
               ": tensor cross-view re-identification toolkit"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic two-view feature files");
  synth_cmd->add_option("--ids", synth.ids, "Number of identities")->required();
  synth_cmd->add_option("--dim", synth.dim, "Feature dimension")->required();
  synth_cmd->add_option("--noise", synth.noise, "Per-view additive noise scale");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed");
  synth_cmd->add_option("--out-a", synth.out_a, "Output file for view A")->required();
  synth_cmd->add_option("--out-b", synth.out_b, "Output file for view B")->required();
  synth_cmd->add_option("--format", synth.format, "csv or raw-binary");

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Tensorize a feature file and report stats");
  ingest_cmd->add_option("--features", ingest.features, "Feature file")->required();
  ingest_cmd->add_option("--format", ingest.format, "csv or raw-binary");
  ingest_cmd->add_option("--view", ingest.view, "View to tensorize (A or B)");
  ingest_cmd->add_option("--part-len", ingest.part_len, "Part length")->required();
  ingest_cmd->add_option("--out", ingest.out, "Output tensor container (TXT1)")->required();
  ingest_cmd->add_option("--stats", ingest.stats, "Optional stats JSON file");

  FitOptions fit_opts;
  auto* fit_cmd = app.add_subcommand("fit", "Train a model from two feature files");
  fit_cmd->add_option("--a", fit_opts.file_a, "View A feature file")->required();
  fit_cmd->add_option("--b", fit_opts.file_b, "View B feature file")->required();
  fit_cmd->add_option("--format", fit_opts.format, "csv or raw-binary");
  fit_cmd->add_option("--part-len", fit_opts.part_len, "Part length")->required();
  fit_cmd->add_option("--dim1", fit_opts.dim1, "Mode-1 target dim (keep, auto, or N)");
  fit_cmd->add_option("--dim2", fit_opts.dim2, "Mode-2 target dim (keep, auto, or N)");
  fit_cmd->add_option("--max-itr", fit_opts.max_itr, "Maximum alternating sweeps");
  fit_cmd->add_option("--epsilon", fit_opts.epsilon, "Convergence tolerance");
  fit_cmd->add_option("--lambda", fit_opts.lambda, "Intra-covariance ridge");
  fit_cmd->add_option("--alignment", fit_opts.alignment, "aligned or all");
  fit_cmd->add_option("--out", fit_opts.out, "Output model file (TXM1)")->required();
  fit_cmd->add_option("--summary", fit_opts.summary, "Optional JSON summary file");

  RankOptions rank;
  auto* rank_cmd = app.add_subcommand("rank", "Rank a gallery against probes with a model");
  rank_cmd->add_option("--model", rank.model, "Model file (TXM1)")->required();
  rank_cmd->add_option("--probe", rank.probe, "Probe feature file")->required();
  rank_cmd->add_option("--gallery", rank.gallery, "Gallery feature file")->required();
  rank_cmd->add_option("--format", rank.format, "csv or raw-binary");
  rank_cmd->add_option("--probe-view", rank.probe_view, "View tag of probe records");
  rank_cmd->add_option("--gallery-view", rank.gallery_view, "View tag of gallery records");
  rank_cmd->add_option("--normalize", rank.normalize, "none, minmax, or zscore");
  rank_cmd->add_option("--out", rank.out, "Output distance CSV")->required();
  rank_cmd->add_option("--rankings", rank.rankings, "Optional rankings CSV");
  rank_cmd->add_option("--threads", rank.threads, "Worker threads (default 1)");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Run the cross-validated evaluation protocol");
  eval_cmd->add_option("--config", eval.config, "Experiment config file")->required();
  eval_cmd->add_option("--out", eval.out, "Output report JSON");
  eval_cmd->add_option("--curves-dir", eval.curves_dir, "Directory for mean CMC curve CSVs");
  eval_cmd->add_flag("--dry-run", eval.dry_run, "Print the resolved plan and exit");
  eval_cmd->add_flag("--no-timestamp", eval.no_timestamp, "Omit the timestamp from the report");
  eval_cmd
      ->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { eval.seed = v; },
                                           "Override the config seed")
      ->type_name("UINT");
  eval_cmd
      ->add_option_function<int>("--threads", [&](int v) { eval.threads = v; },
                                 "Override the config thread count")
      ->type_name("INT");
  eval_cmd
      ->add_option_function<int>("--folds", [&](int v) { eval.folds = v; },
                                 "Override the config fold count")
      ->type_name("INT");
  eval_cmd
      ->add_option_function<std::string>(
          "--normalization", [&](std::string v) { eval.normalization = std::move(v); },
          "Override the config score normalization")
      ->type_name("TEXT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth_cmd->parsed()) {
      run_synth(synth);
    } else if (ingest_cmd->parsed()) {
      run_ingest(ingest);
    } else if (fit_cmd->parsed()) {
      run_fit(fit_opts);
    } else if (rank_cmd->parsed()) {
      run_rank(rank);
    } else if (eval_cmd->parsed()) {
      if (!eval.dry_run && eval.out.empty()) {
        throw txreid::UsageError("eval: --out is required unless --dry-run is given");
      }
      run_eval(eval);
    }
  } catch (const txreid::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const txreid::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
