// roadsafe: road-safety labels for road segments from OSM-derived features.
//
// Subcommands: ingest-osm, features, train, evaluate, predict, synth.
// Exit codes: 0 ok, 1 missing input, 2 parse error, 3 schema mismatch.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "roadsafe/csv.hpp"
#include "roadsafe/features.hpp"
#include "roadsafe/gbt.hpp"
#include "roadsafe/impute.hpp"
#include "roadsafe/osm.hpp"
#include "roadsafe/pipeline.hpp"
#include "roadsafe/rng.hpp"
#include "roadsafe/synth.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitMissingInput = 1;
constexpr int kExitParseError = 2;
constexpr int kExitSchemaMismatch = 3;

class MissingInput : public std::runtime_error {
 public:
  explicit MissingInput(const std::string& path)
      : std::runtime_error("missing required input: " + path) {}
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput(path);
  return in;
}

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << content;
}

void log_event(ordered_json fields) {
  std::cerr << fields.dump() << "\n";
}

// --config JSON provides defaults; explicit flags win
json load_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      auto in = open_input(argv[i + 1]);
      json j;
      in >> j;
      return j;
    }
  }
  return json::object();
}

template <typename T>
void config_default(const json& cfg, const char* section, const char* key,
                    T& value) {
  if (section[0] == '\0') {
    if (cfg.contains(key)) value = cfg.at(key).get<T>();
  } else if (cfg.contains(section) && cfg.at(section).contains(key)) {
    value = cfg.at(section).at(key).get<T>();
  }
}

struct CommonEvalOptions {
  roadsafe::EvalConfig eval;
  std::string feature_set = "all";

  void apply_feature_set() {
    eval.feature_set = feature_set == "osm-only" || feature_set == "osm_only"
                           ? roadsafe::FeatureSet::OsmOnly
                           : roadsafe::FeatureSet::All;
  }
  void add_model_flags(CLI::App* cmd) {
    cmd->add_option("--impute-lambda", eval.impute.lambda);
    cmd->add_option("--impute-max-iters", eval.impute.max_iters);
    cmd->add_option("--impute-tol", eval.impute.tol);
    cmd->add_flag("--no-standardize",
                  [this](std::int64_t) { eval.impute.standardize = false; });
    cmd->add_option("--smote-k", eval.smote.k_neighbors);
    cmd->add_option("--smote-ratio", eval.smote.target_ratio);
    cmd->add_option("--trees", eval.gbt.n_trees);
    cmd->add_option("--learning-rate", eval.gbt.learning_rate);
    cmd->add_option("--max-depth", eval.gbt.max_depth);
    cmd->add_option("--lambda-l2", eval.gbt.lambda_l2);
    cmd->add_option("--gamma", eval.gbt.gamma);
    cmd->add_option("--min-child-weight", eval.gbt.min_child_weight);
  }
  void load_defaults(const json& cfg) {
    config_default(cfg, "", "seed", eval.seed);
    config_default(cfg, "", "feature_set", feature_set);
    config_default(cfg, "", "jobs", eval.jobs);
    config_default(cfg, "cv", "folds", eval.cv.folds);
    config_default(cfg, "cv", "min_dist_m", eval.cv.min_dist_m);
    config_default(cfg, "impute", "lambda", eval.impute.lambda);
    config_default(cfg, "impute", "max_iters", eval.impute.max_iters);
    config_default(cfg, "impute", "tol", eval.impute.tol);
    config_default(cfg, "impute", "standardize", eval.impute.standardize);
    config_default(cfg, "smote", "k_neighbors", eval.smote.k_neighbors);
    config_default(cfg, "smote", "target_ratio", eval.smote.target_ratio);
    config_default(cfg, "gbt", "n_trees", eval.gbt.n_trees);
    config_default(cfg, "gbt", "learning_rate", eval.gbt.learning_rate);
    config_default(cfg, "gbt", "max_depth", eval.gbt.max_depth);
    config_default(cfg, "gbt", "lambda_l2", eval.gbt.lambda_l2);
    config_default(cfg, "gbt", "gamma", eval.gbt.gamma);
    config_default(cfg, "gbt", "min_child_weight", eval.gbt.min_child_weight);
  }
};

roadsafe::FeatureMatrix load_features(const std::string& features_path,
                                      const std::string& schema_path) {
  auto schema_in = open_input(schema_path);
  const roadsafe::FeatureSchema schema = roadsafe::schema_from_json(schema_in);
  auto features_in = open_input(features_path);
  return roadsafe::read_feature_csv(features_in, schema);
}

int cmd_ingest(const std::string& osm_path, const std::string& out_path) {
  const std::string source_hash = roadsafe::file_content_hash(osm_path);
  auto in = open_input(osm_path);
  const roadsafe::OsmData data = roadsafe::parse_osm(in);
  std::ostringstream cache;
  roadsafe::write_graph_cache(cache, data, source_hash);
  write_file(out_path, cache.str());
  log_event({{"event", "ingest_done"},
             {"nodes", data.graph.node_count()},
             {"edges", data.graph.edge_count()},
             {"ways", data.stats.ways_retained},
             {"ways_skipped_unknown_node", data.stats.ways_skipped_unknown_node},
             {"source_hash", source_hash},
             {"graph_hash", roadsafe::graph_hash(data)}});
  return kExitOk;
}

int cmd_features(const std::string& osm_path, const std::string& graph_path,
                 const std::string& segments_path,
                 const std::string& population_path,
                 const std::string& traffic_path, const std::string& out_dir,
                 const std::string& feature_set, std::uint64_t seed,
                 double snap_max_m) {
  roadsafe::OsmData data;
  if (!graph_path.empty()) {
    auto in = open_input(graph_path);
    roadsafe::GraphCache cache = roadsafe::read_graph_cache(in);
    if (!osm_path.empty() &&
        roadsafe::file_content_hash(osm_path) != cache.source_hash) {
      log_event({{"event", "cache_invalid"}, {"cache", graph_path}});
      auto osm_in = open_input(osm_path);
      data = roadsafe::parse_osm(osm_in);
    } else {
      data = std::move(cache.data);
    }
  } else if (!osm_path.empty()) {
    auto osm_in = open_input(osm_path);
    data = roadsafe::parse_osm(osm_in);
  } else {
    throw MissingInput("--graph or --osm");
  }

  auto seg_in = open_input(segments_path);
  const auto segments = roadsafe::read_segments_csv(seg_in);
  auto pop_in = open_input(population_path);
  const auto raster = roadsafe::read_population_csv(pop_in);

  const bool with_traffic = feature_set != "osm-only" && feature_set != "osm_only";
  std::optional<std::map<std::string, roadsafe::TrafficRecord>> traffic;
  if (with_traffic) {
    if (traffic_path.empty()) {
      throw MissingInput("--traffic (required with --feature-set all)");
    }
    auto traffic_in = open_input(traffic_path);
    traffic = roadsafe::read_traffic_csv(traffic_in);
  }

  roadsafe::ExtractConfig config;
  config.snap_max_m = snap_max_m;
  roadsafe::ExtractReport report;
  const roadsafe::FeatureMatrix m = roadsafe::extract_features(
      segments, data.graph, data.way_attrs, raster,
      traffic ? &*traffic : nullptr, config, &report);

  ordered_json hash_src{{"command", "features"},
                        {"feature_set", with_traffic ? "all" : "osm_only"},
                        {"snap_max_m", snap_max_m},
                        {"seed", seed}};
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(
                    roadsafe::fnv1a64(hash_src.dump())));

  std::ostringstream csv;
  roadsafe::write_feature_csv(csv, m);
  write_file(out_dir + "/features.csv", csv.str());
  write_file(out_dir + "/features.schema.json",
             roadsafe::schema_to_json(m.schema, hash_hex, seed));
  log_event({{"event", "features_done"},
             {"rows", m.ids.size()},
             {"columns", m.schema.width()},
             {"segments_unsnapped", report.segments_unsnapped},
             {"segments_unroutable", report.segments_unroutable},
             {"traffic_rows_unmatched", report.traffic_rows_unmatched},
             {"config_hash", hash_hex},
             {"seed", seed}});
  return kExitOk;
}

int cmd_evaluate(const CommonEvalOptions& opts,
                 const std::string& features_path,
                 const std::string& schema_path,
                 const std::string& labels_path,
                 const std::string& segments_path, const std::string& out_path,
                 const std::string& text_path) {
  const roadsafe::FeatureMatrix features =
      load_features(features_path, schema_path);
  auto labels_in = open_input(labels_path);
  const auto labels = roadsafe::read_labels_csv(labels_in);
  auto seg_in = open_input(segments_path);
  const auto segments = roadsafe::read_segments_csv(seg_in);

  log_event({{"event", "evaluate_start"},
             {"config_hash", roadsafe::eval_config_hash(opts.eval)},
             {"seed", opts.eval.seed}});
  const roadsafe::EvalResult result =
      roadsafe::run_evaluation(features, labels, segments, opts.eval);

  const std::string text = roadsafe::eval_result_to_text(result);
  if (!out_path.empty()) write_file(out_path, roadsafe::eval_result_to_json(result));
  if (!text_path.empty()) write_file(text_path, text);
  std::cout << text;
  log_event({{"event", "evaluate_done"},
             {"config_hash", result.config_hash},
             {"seed", result.seed},
             {"model_high_risk_f1", result.model.high_risk.f1},
             {"baseline_high_risk_f1", result.baseline.high_risk.f1},
             {"dropped", result.plan.total_dropped},
             {"swaps", result.plan.total_swaps}});
  return kExitOk;
}

int cmd_train(const CommonEvalOptions& opts, const std::string& features_path,
              const std::string& schema_path, const std::string& labels_path,
              const std::string& out_path) {
  const roadsafe::FeatureMatrix features =
      load_features(features_path, schema_path);
  auto labels_in = open_input(labels_path);
  const auto labels = roadsafe::read_labels_csv(labels_in);

  const roadsafe::TrainOutput out =
      roadsafe::train_full(features, labels, opts.eval);
  write_file(out_path, roadsafe::model_to_json(out.model));
  log_event({{"event", "train_done"},
             {"config_hash", roadsafe::eval_config_hash(opts.eval)},
             {"seed", opts.eval.seed},
             {"rounds", out.train.rounds_completed},
             {"final_loss",
              out.train.train_loss.empty() ? 0.0 : out.train.train_loss.back()},
             {"impute_iterations", out.impute.iterations}});
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& features_path,
                const std::string& schema_path, const std::string& out_path,
                const roadsafe::ImputeConfig& impute) {
  (void)open_input(model_path);
  const roadsafe::GbtModel model = roadsafe::load_model(model_path);
  const roadsafe::FeatureMatrix features =
      load_features(features_path, schema_path);
  const roadsafe::Predictions pred =
      roadsafe::predict_batch(model, features, impute);

  std::ostringstream csv;
  csv << "id,proba,label\n";
  for (std::size_t i = 0; i < pred.ids.size(); ++i) {
    roadsafe::write_csv_row(
        csv, {pred.ids[i],
              roadsafe::format_double(pred.proba(static_cast<Eigen::Index>(i))),
              pred.label[i] ? "high_risk" : "safe"});
  }
  write_file(out_path, csv.str());
  log_event({{"event", "predict_done"}, {"rows", pred.ids.size()}});
  return kExitOk;
}

int cmd_synth(const std::string& preset, int n, double minority_frac,
              double cluster_km, double label_noise, std::uint64_t seed,
              bool no_traffic, const std::string& out_dir) {
  roadsafe::SynthConfig config =
      preset.empty() ? roadsafe::SynthConfig{} : roadsafe::country_preset(preset);
  if (n > 0) config.n_segments = n;
  if (minority_frac > 0.0) config.minority_frac = minority_frac;
  if (cluster_km > 0.0) config.spatial_cluster_km = cluster_km;
  if (label_noise >= 0.0) config.label_noise = label_noise;
  config.seed = seed;
  config.with_traffic = !no_traffic;

  const roadsafe::SynthData data = roadsafe::generate(config);

  ordered_json hash_src{{"command", "synth"},
                        {"preset", preset},
                        {"n", config.n_segments},
                        {"minority_frac", config.minority_frac},
                        {"cluster_km", config.spatial_cluster_km},
                        {"label_noise", config.label_noise},
                        {"seed", seed}};
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(
                    roadsafe::fnv1a64(hash_src.dump())));

  std::ostringstream segments;
  roadsafe::write_segments_csv(segments, data.segments);
  write_file(out_dir + "/segments.csv", segments.str());

  std::ostringstream features;
  roadsafe::write_feature_csv(features, data.features);
  write_file(out_dir + "/features.csv", features.str());
  write_file(out_dir + "/features.schema.json",
             roadsafe::schema_to_json(data.features.schema, hash_hex, seed));

  std::vector<std::pair<std::string, roadsafe::SafetyLabel>> labels;
  labels.reserve(data.labels.size());
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    labels.emplace_back(data.features.ids[i],
                        data.labels[i] ? roadsafe::SafetyLabel::HighRisk
                                       : roadsafe::SafetyLabel::Safe);
  }
  std::ostringstream labels_csv;
  roadsafe::write_labels_csv(labels_csv, labels);
  write_file(out_dir + "/labels.csv", labels_csv.str());

  int high_risk = 0;
  for (int y : data.labels) high_risk += y;
  ordered_json meta{{"config_hash", hash_hex},
                    {"seed", seed},
                    {"n_segments", config.n_segments},
                    {"high_risk", high_risk},
                    {"minority_frac_target", config.minority_frac},
                    {"label_noise", config.label_noise},
                    {"cluster_km", config.spatial_cluster_km},
                    {"with_traffic", config.with_traffic}};
  write_file(out_dir + "/meta.json", meta.dump(2) + "\n");
  log_event({{"event", "synth_done"},
             {"config_hash", hash_hex},
             {"seed", seed},
             {"rows", config.n_segments},
             {"high_risk", high_risk}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"road safety classification pipeline"};
  app.require_subcommand(1);

  json file_cfg;
  try {
    file_cfg = load_config(argc, argv);
  } catch (const MissingInput& e) {
    std::cerr << e.what() << "\n";
    return kExitMissingInput;
  } catch (const std::exception& e) {
    std::cerr << "bad config file: " << e.what() << "\n";
    return kExitParseError;
  }

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags win");

  // ingest-osm
  auto* ingest = app.add_subcommand("ingest-osm", "parse an OSM extract into a graph cache");
  std::string ingest_osm, ingest_out;
  config_default(file_cfg, "paths", "osm", ingest_osm);
  ingest->add_option("--osm", ingest_osm, "OSM XML extract");
  ingest->add_option("--out", ingest_out, "graph cache JSON path")->required();

  // features
  auto* feat = app.add_subcommand("features", "compute the feature matrix for segments");
  std::string feat_osm, feat_graph, feat_segments, feat_population, feat_traffic,
      feat_out = "features_out", feat_set = "all";
  std::uint64_t feat_seed = 0;
  double feat_snap = 30.0;
  config_default(file_cfg, "paths", "osm", feat_osm);
  config_default(file_cfg, "paths", "graph", feat_graph);
  config_default(file_cfg, "paths", "segments", feat_segments);
  config_default(file_cfg, "paths", "population", feat_population);
  config_default(file_cfg, "paths", "traffic", feat_traffic);
  config_default(file_cfg, "", "seed", feat_seed);
  config_default(file_cfg, "", "feature_set", feat_set);
  feat->add_option("--osm", feat_osm);
  feat->add_option("--graph", feat_graph, "graph cache from ingest-osm");
  feat->add_option("--segments", feat_segments)->required();
  feat->add_option("--population", feat_population)->required();
  feat->add_option("--traffic", feat_traffic);
  feat->add_option("--feature-set", feat_set)->check(CLI::IsMember({"all", "osm-only", "osm_only"}));
  feat->add_option("--snap-max-m", feat_snap);
  feat->add_option("--seed", feat_seed);
  feat->add_option("--out", feat_out, "output directory");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "cross-validated evaluation with baseline");
  CommonEvalOptions eval_opts;
  eval_opts.load_defaults(file_cfg);
  std::string eval_features, eval_schema, eval_labels, eval_segments,
      eval_out = "report.json", eval_text;
  config_default(file_cfg, "paths", "features", eval_features);
  config_default(file_cfg, "paths", "schema", eval_schema);
  config_default(file_cfg, "paths", "labels", eval_labels);
  config_default(file_cfg, "paths", "segments", eval_segments);
  eval->add_option("--features", eval_features)->required();
  eval->add_option("--schema", eval_schema)->required();
  eval->add_option("--labels", eval_labels)->required();
  eval->add_option("--segments", eval_segments)->required();
  eval->add_option("--feature-set", eval_opts.feature_set)
      ->check(CLI::IsMember({"all", "osm-only", "osm_only"}));
  eval->add_option("--folds", eval_opts.eval.cv.folds);
  eval->add_option("--min-dist-m", eval_opts.eval.cv.min_dist_m);
  eval->add_option("--seed", eval_opts.eval.seed);
  eval->add_option("--jobs", eval_opts.eval.jobs);
  eval->add_option("--baseline-repetitions", eval_opts.eval.baseline_repetitions);
  eval->add_option("--out", eval_out, "JSON report path");
  eval->add_option("--text", eval_text, "aligned text table path");
  eval_opts.add_model_flags(eval);

  // train
  auto* train = app.add_subcommand("train", "train a model on all labeled rows");
  CommonEvalOptions train_opts;
  train_opts.load_defaults(file_cfg);
  std::string train_features, train_schema, train_labels, train_out = "model.json";
  config_default(file_cfg, "paths", "features", train_features);
  config_default(file_cfg, "paths", "schema", train_schema);
  config_default(file_cfg, "paths", "labels", train_labels);
  train->add_option("--features", train_features)->required();
  train->add_option("--schema", train_schema)->required();
  train->add_option("--labels", train_labels)->required();
  train->add_option("--feature-set", train_opts.feature_set)
      ->check(CLI::IsMember({"all", "osm-only", "osm_only"}));
  train->add_option("--seed", train_opts.eval.seed);
  train->add_option("--out", train_out);
  train_opts.add_model_flags(train);

  // predict
  auto* predict = app.add_subcommand("predict", "score segments with a saved model");
  std::string pred_model, pred_features, pred_schema, pred_out = "predictions.csv";
  roadsafe::ImputeConfig pred_impute;
  config_default(file_cfg, "paths", "model", pred_model);
  predict->add_option("--model", pred_model)->required();
  predict->add_option("--features", pred_features)->required();
  predict->add_option("--schema", pred_schema)->required();
  predict->add_option("--out", pred_out);
  predict->add_option("--impute-lambda", pred_impute.lambda);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
  std::string synth_preset, synth_out = "synth_out";
  int synth_n = 0;
  double synth_minority = 0.0, synth_cluster = 0.0, synth_noise = -1.0;
  std::uint64_t synth_seed = 0;
  bool synth_no_traffic = false;
  config_default(file_cfg, "", "seed", synth_seed);
  synth->add_option("--preset", synth_preset)->check(CLI::IsMember({"hr", "gr", "sl", "nl", ""}));
  synth->add_option("--n", synth_n);
  synth->add_option("--minority-frac", synth_minority);
  synth->add_option("--cluster-km", synth_cluster);
  synth->add_option("--label-noise", synth_noise);
  synth->add_option("--seed", synth_seed);
  synth->add_flag("--no-traffic", synth_no_traffic);
  synth->add_option("--out", synth_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      if (ingest_osm.empty()) throw MissingInput("--osm");
      return cmd_ingest(ingest_osm, ingest_out);
    }
    if (*feat) {
      return cmd_features(feat_osm, feat_graph, feat_segments, feat_population,
                          feat_traffic, feat_out, feat_set, feat_seed, feat_snap);
    }
    if (*eval) {
      eval_opts.apply_feature_set();
      return cmd_evaluate(eval_opts, eval_features, eval_schema, eval_labels,
                          eval_segments, eval_out, eval_text);
    }
    if (*train) {
      train_opts.apply_feature_set();
      return cmd_train(train_opts, train_features, train_schema, train_labels,
                       train_out);
    }
    if (*predict) {
      return cmd_predict(pred_model, pred_features, pred_schema, pred_out,
                         pred_impute);
    }
    if (*synth) {
      return cmd_synth(synth_preset, synth_n, synth_minority, synth_cluster,
                       synth_noise, synth_seed, synth_no_traffic, synth_out);
    }
  } catch (const MissingInput& e) {
    std::cerr << e.what() << "\n";
    return kExitMissingInput;
  } catch (const roadsafe::OsmParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitParseError;
  } catch (const roadsafe::CsvError& e) {
    std::cerr << e.what() << "\n";
    return kExitParseError;
  } catch (const roadsafe::SchemaMismatchError& e) {
    std::cerr << e.what() << "\n";
    return kExitSchemaMismatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingInput;
  }
  return kExitOk;
}
