#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "txreid/errors.hpp"
#include "txreid/feature_set.hpp"
#include "txreid/matching.hpp"
#include "txreid/rng.hpp"
#include "txreid/txqda.hpp"
#include "txreid/version.hpp"

namespace txreid {

// Cumulative match curve: rates[r-1] is the fraction of probes whose correct
// identity appears within the top r ranked gallery entries.
struct CmcCurve {
  std::vector<double> rates;

  int max_rank() const { return static_cast<int>(rates.size()); }

  // Rate at a requested rank, clamped to the curve length (ranks beyond the
  // gallery size share the terminal rate).
  double at_rank(int r) const {
    if (r < 1 || rates.empty()) throw UsageError("CmcCurve::at_rank: rank must be >= 1");
    return rates[static_cast<std::size_t>(std::min<int>(r, max_rank()) - 1)];
  }
};

inline CmcCurve cmc(const DistanceMatrix& d, int max_rank) {
  if (max_rank < 1) throw UsageError("cmc: max_rank must be >= 1");
  const Index np = d.values.rows();
  if (np < 1) throw UsageError("cmc: no probes");

  const auto ranks = rank_gallery(d);
  std::vector<std::int64_t> hits(static_cast<std::size_t>(max_rank), 0);
  for (Index i = 0; i < np; ++i) {
    const int want = d.probe_labels[static_cast<std::size_t>(i)];
    int found = -1;
    const auto& order = ranks[static_cast<std::size_t>(i)];
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (d.gallery_labels[static_cast<std::size_t>(order[pos])] == want) {
        found = static_cast<int>(pos);
        break;
      }
    }
    if (found < 0) {
      throw DataError("cmc: probe " + std::to_string(want) + " (row " + std::to_string(i) +
                      ") has no gallery entry with its identity");
    }
    if (found < max_rank) ++hits[static_cast<std::size_t>(found)];
  }

  CmcCurve curve;
  curve.rates.resize(static_cast<std::size_t>(max_rank));
  std::int64_t cum = 0;
  for (int r = 0; r < max_rank; ++r) {
    cum += hits[static_cast<std::size_t>(r)];
    curve.rates[static_cast<std::size_t>(r)] = static_cast<double>(cum) / static_cast<double>(np);
  }
  return curve;
}

// Disjoint identity folds of near-equal size (difference at most one).
struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> folds;
};

// Sorts and dedupes the identities, shuffles them with the documented
// deterministic stream, and deals them round-robin into k folds.
inline FoldPlan kfold_split(std::vector<int> ids, int k, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (k < 2) throw UsageError("kfold_split: k must be >= 2");
  if (static_cast<std::size_t>(k) > ids.size()) {
    throw UsageError("kfold_split: k exceeds the identity count");
  }

  RandomStream rs(seed);
  fisher_yates(ids, rs);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    plan.folds[i % static_cast<std::size_t>(k)].push_back(ids[i]);
  }
  return plan;
}

// Synthetic two-view data: one latent standard-normal vector per identity,
// observed in each view with independent additive noise. The noise vectors
// are drawn even when noise == 0 so the latent stream is the same for every
// noise level under a fixed seed.
inline std::pair<FeatureSet, FeatureSet> synth_dataset(int n_ids, int dim, double noise,
                                                       std::uint64_t seed) {
  if (n_ids < 2) throw UsageError("synth_dataset: n_ids must be >= 2");
  if (dim < 2) throw UsageError("synth_dataset: dim must be >= 2");
  if (noise < 0.0) throw UsageError("synth_dataset: noise must be non-negative");

  RandomStream rs(seed);
  FeatureSet a, b;
  a.descriptor = b.descriptor = "synth";
  a.dim = b.dim = dim;
  std::vector<double> latent(static_cast<std::size_t>(dim));
  for (int id = 0; id < n_ids; ++id) {
    for (auto& v : latent) v = rs.normal();
    FeatureRecord ra{id, View::A, latent};
    FeatureRecord rb{id, View::B, latent};
    for (int j = 0; j < dim; ++j) ra.values[static_cast<std::size_t>(j)] += noise * rs.normal();
    for (int j = 0; j < dim; ++j) rb.values[static_cast<std::size_t>(j)] += noise * rs.normal();
    a.records.push_back(std::move(ra));
    b.records.push_back(std::move(rb));
  }
  return {std::move(a), std::move(b)};
}

struct DescriptorFiles {
  std::string name;
  std::string file_a;
  std::string file_b;
};

struct ExperimentConfig {
  std::vector<DescriptorFiles> descriptors;  // fused along the parts mode in this order
  FeatureFormat format = FeatureFormat::Csv;
  Index part_len = 0;
  std::vector<int> dim_sweep;  // mode-2 output dimensions to evaluate
  int mode1_dim = 0;           // 0 = keep source extent, -1 = eigenvalue>1 selection
  int folds = 10;
  std::uint64_t seed = 0;
  std::vector<int> ranks = {1, 5, 10, 15, 20};
  ScoreNormalization normalization = ScoreNormalization::MinMax;
  int max_itr = 5;
  double epsilon = 1e-6;
  double lambda = 1e-3;
  PairAlignment alignment = PairAlignment::Aligned;
  bool standardize = false;
  bool both_directions = false;
  int threads = 1;
};

struct CellResult {
  int dim = 0;
  int fold = 0;
  bool ok = false;
  std::string error;
  CmcCurve curve;
  int iterations_run = 0;
  bool converged = false;
  std::array<int, 2> retained{0, 0};
};

struct DimSummary {
  int dim = 0;
  int folds_used = 0;
  CmcCurve mean_curve;
};

struct ExperimentReport {
  ExperimentConfig config;
  FoldPlan plan;
  std::vector<CellResult> cells;
  std::vector<DimSummary> summaries;
};

namespace detail {

inline ViewTensor load_fused_view(const ExperimentConfig& cfg, View v) {
  std::optional<ViewTensor> fused;
  for (const auto& desc : cfg.descriptors) {
    const std::string& path = (v == View::A) ? desc.file_a : desc.file_b;
    const FeatureSet fs = load_features(path, cfg.format, desc.name);
    ViewTensor t = split_to_tensor(fs, v, cfg.part_len);
    fused = fused ? fuse_tensors(*fused, t) : std::move(t);
  }
  return *fused;
}

// Rank-wise mean over fold curves. Shorter curves (smaller galleries) are
// extended with their terminal rate.
inline CmcCurve mean_curve(const std::vector<const CmcCurve*>& curves) {
  std::size_t len = 0;
  for (const auto* c : curves) len = std::max(len, c->rates.size());
  CmcCurve mean;
  mean.rates.assign(len, 0.0);
  for (const auto* c : curves) {
    for (std::size_t r = 0; r < len; ++r) {
      mean.rates[r] += (r < c->rates.size()) ? c->rates[r] : c->rates.back();
    }
  }
  for (auto& v : mean.rates) v /= static_cast<double>(curves.size());
  return mean;
}

inline std::string utc_timestamp() {
  char buf[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

using CellCallback = std::function<void(const CellResult&)>;

// The full protocol: identity-level k-fold split, per (dim, fold) cell a
// TXQDA fit on the training identities and a probe(A) -> gallery(B) CMC on
// the held-out identities. Cell failures are recorded and skipped; the run
// aborts only if every cell fails. `on_cell`, when given, is invoked after
// each cell (progress reporting).
inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       const CellCallback& on_cell = {}) {
  if (cfg.descriptors.empty()) throw UsageError("run_experiment: no descriptors configured");
  if (cfg.part_len < 1) throw UsageError("run_experiment: part_len must be positive");
  if (cfg.dim_sweep.empty()) throw UsageError("run_experiment: empty dim sweep");
  for (int dim : cfg.dim_sweep) {
    if (dim < 1 || static_cast<Index>(dim) > cfg.part_len) {
      throw UsageError("run_experiment: sweep dimension " + std::to_string(dim) +
                       " outside [1, part_len]");
    }
  }
  if (cfg.ranks.empty()) throw UsageError("run_experiment: no report ranks configured");
  if (cfg.folds < 2) throw UsageError("run_experiment: folds must be >= 2");

  const ViewTensor a = detail::load_fused_view(cfg, View::A);
  const ViewTensor b = detail::load_fused_view(cfg, View::B);
  if (cfg.mode1_dim > 0 && static_cast<Index>(cfg.mode1_dim) > a.parts()) {
    throw UsageError("run_experiment: mode1_dim exceeds the fused part count");
  }

  {
    const std::set<int> ids_a(a.labels.begin(), a.labels.end());
    const std::set<int> ids_b(b.labels.begin(), b.labels.end());
    for (int id : ids_a) {
      if (!ids_b.count(id)) {
        throw DataError("run_experiment: identity " + std::to_string(id) + " present only in view A");
      }
    }
    for (int id : ids_b) {
      if (!ids_a.count(id)) {
        throw DataError("run_experiment: identity " + std::to_string(id) + " present only in view B");
      }
    }
  }

  ExperimentReport report;
  report.config = cfg;
  report.plan = kfold_split(a.labels, cfg.folds, cfg.seed);

  const std::set<int> all_ids(a.labels.begin(), a.labels.end());
  std::string first_error;
  int ok_cells = 0;

  for (int dim : cfg.dim_sweep) {
    for (int f = 0; f < cfg.folds; ++f) {
      CellResult cell;
      cell.dim = dim;
      cell.fold = f;
      try {
        const auto& test_fold = report.plan.folds[static_cast<std::size_t>(f)];
        std::unordered_set<int> test_ids(test_fold.begin(), test_fold.end());
        std::unordered_set<int> train_ids;
        for (int id : all_ids)
          if (!test_ids.count(id)) train_ids.insert(id);

        ViewTensor train_a = select_identities(a, train_ids);
        ViewTensor train_b = select_identities(b, train_ids);
        ViewTensor test_a = select_identities(a, test_ids);
        ViewTensor test_b = select_identities(b, test_ids);
        if (cfg.standardize) {
          const Standardizer st = Standardizer::fit(train_a, train_b);
          train_a = st.apply(train_a);
          train_b = st.apply(train_b);
          test_a = st.apply(test_a);
          test_b = st.apply(test_b);
        }

        TxqdaConfig tc;
        if (cfg.mode1_dim == 0) {
          tc.target_dim1 = static_cast<int>(a.parts());
        } else if (cfg.mode1_dim > 0) {
          tc.target_dim1 = cfg.mode1_dim;
        }  // -1 leaves it empty: eigenvalue>1 selection
        tc.target_dim2 = dim;
        tc.max_itr = cfg.max_itr;
        tc.epsilon = cfg.epsilon;
        tc.lambda = cfg.lambda;
        tc.alignment = cfg.alignment;

        const TxqdaModel model = fit(train_a, train_b, tc);
        DistanceMatrix d = distance_matrix(test_a, test_b, model, cfg.threads);
        d = normalize_scores(d, cfg.normalization);
        cell.curve = cmc(d, static_cast<int>(d.values.cols()));
        if (cfg.both_directions) {
          DistanceMatrix dr = distance_matrix(test_b, test_a, model, cfg.threads);
          dr = normalize_scores(dr, cfg.normalization);
          const CmcCurve back = cmc(dr, static_cast<int>(dr.values.cols()));
          cell.curve = detail::mean_curve({&cell.curve, &back});
        }
        cell.iterations_run = model.iterations_run;
        cell.converged = model.converged;
        cell.retained = {static_cast<int>(model.target_dim(1)),
                         static_cast<int>(model.target_dim(2))};
        cell.ok = true;
        ++ok_cells;
      } catch (const Error& e) {
        cell.error = e.what();
        if (first_error.empty()) first_error = e.what();
      }
      if (on_cell) on_cell(cell);
      report.cells.push_back(std::move(cell));
    }
  }

  if (ok_cells == 0) {
    throw DataError("run_experiment: every (dim, fold) cell failed; first error: " + first_error);
  }

  for (int dim : cfg.dim_sweep) {
    DimSummary s;
    s.dim = dim;
    std::vector<const CmcCurve*> curves;
    for (const auto& cell : report.cells) {
      if (cell.dim == dim && cell.ok) curves.push_back(&cell.curve);
    }
    s.folds_used = static_cast<int>(curves.size());
    if (!curves.empty()) s.mean_curve = detail::mean_curve(curves);
    report.summaries.push_back(std::move(s));
  }
  return report;
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json descs = nlohmann::ordered_json::array();
  for (const auto& d : cfg.descriptors) {
    descs.push_back({{"name", d.name}, {"a", d.file_a}, {"b", d.file_b}});
  }
  j["descriptors"] = descs;
  j["format"] = cfg.format == FeatureFormat::Csv ? "csv" : "raw-binary";
  j["part_len"] = cfg.part_len;
  j["dim_sweep"] = cfg.dim_sweep;
  j["mode1_dim"] = cfg.mode1_dim;
  j["folds"] = cfg.folds;
  j["seed"] = cfg.seed;
  j["ranks"] = cfg.ranks;
  j["normalization"] = normalization_name(cfg.normalization);
  j["max_itr"] = cfg.max_itr;
  j["epsilon"] = cfg.epsilon;
  j["lambda"] = cfg.lambda;
  j["alignment"] = alignment_name(cfg.alignment);
  j["standardize"] = cfg.standardize;
  j["both_directions"] = cfg.both_directions;
  j["threads"] = cfg.threads;
  return j;
}

inline nlohmann::ordered_json report_to_json(const ExperimentReport& report,
                                             bool include_timestamp) {
  nlohmann::ordered_json j;
  j["format_version"] = kReportFormatVersion;
  j["tool"] = std::string(kToolName) + " " + kToolVersion;
  if (include_timestamp) j["generated_at"] = detail::utc_timestamp();
  j["prng"] = kPrngContract;
  j["config"] = config_to_json(report.config);
  j["folds"] = report.plan.folds;

  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    nlohmann::ordered_json jc;
    jc["dim"] = c.dim;
    jc["fold"] = c.fold;
    jc["ok"] = c.ok;
    if (c.ok) {
      jc["cmc"] = c.curve.rates;
      jc["iterations_run"] = c.iterations_run;
      jc["converged"] = c.converged;
      jc["retained_dims"] = c.retained;
    } else {
      jc["error"] = c.error;
    }
    cells.push_back(std::move(jc));
  }
  j["cells"] = cells;

  nlohmann::ordered_json means = nlohmann::ordered_json::array();
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const auto& s : report.summaries) {
    means.push_back({{"dim", s.dim}, {"folds_used", s.folds_used}, {"cmc", s.mean_curve.rates}});
    nlohmann::ordered_json row;
    row["dim"] = s.dim;
    nlohmann::ordered_json rates;
    for (int r : report.config.ranks) {
      rates["rank-" + std::to_string(r)] =
          s.mean_curve.rates.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(s.mean_curve.at_rank(r));
    }
    row["rates"] = rates;
    table.push_back(std::move(row));
  }
  j["mean_curves"] = means;
  j["rank_table"] = table;
  return j;
}

inline void write_report(const ExperimentReport& report, const std::string& path,
                         bool include_timestamp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write report: " + path);
  out << report_to_json(report, include_timestamp).dump(2) << '\n';
}

// `rank,rate` rows, one per rank; the data behind a CMC plot.
inline void write_curve_csv(const CmcCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write curve file: " + path);
  out << "rank,rate\n";
  char buf[32];
  for (std::size_t r = 0; r < curve.rates.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%.17g", curve.rates[r]);
    out << (r + 1) << ',' << buf << '\n';
  }
}

}  // namespace txreid
