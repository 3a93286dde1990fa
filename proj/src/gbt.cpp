#include "roadsafe/gbt.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace roadsafe {

double Tree::value(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int i = 0;
  while (!nodes[i].is_leaf()) {
    i = row(nodes[i].feature) < nodes[i].threshold ? nodes[i].left
                                                   : nodes[i].right;
  }
  return nodes[i].leaf;
}

int Tree::depth() const {
  // iterative depth over the arena
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int depth = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    depth = std::max(depth, d);
    if (!nodes[i].is_leaf()) {
      stack.push_back({nodes[i].left, d + 1});
      stack.push_back({nodes[i].right, d + 1});
    }
  }
  return depth;
}

double split_gain(double g_left, double h_left, double g_right, double h_right,
                  double lambda_l2, double gamma) {
  const double g_total = g_left + g_right;
  const double h_total = h_left + h_right;
  return 0.5 * (g_left * g_left / (h_left + lambda_l2) +
                g_right * g_right / (h_right + lambda_l2) -
                g_total * g_total / (h_total + lambda_l2)) -
         gamma;
}

double leaf_weight(double g_sum, double h_sum, double lambda_l2) {
  return -g_sum / (h_sum + lambda_l2);
}

namespace {

double mean_logloss(const VectorXd& scores, const std::vector<int>& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double p =
        std::clamp(sigmoid(scores(i)), 1e-15, 1.0 - 1e-15);
    total += y[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(scores.size());
}

struct LevelState {
  // per active-node scan accumulators, reset for every feature
  std::vector<double> run_g, run_h, prev_value;
  std::vector<int> seen;
  // per active-node best split
  std::vector<double> best_gain, best_thr, best_gl, best_hl;
  std::vector<int> best_feat;

  void resize(std::size_t n) {
    run_g.assign(n, 0.0);
    run_h.assign(n, 0.0);
    prev_value.assign(n, 0.0);
    seen.assign(n, 0);
    best_gain.assign(n, 0.0);
    best_thr.assign(n, 0.0);
    best_gl.assign(n, 0.0);
    best_hl.assign(n, 0.0);
    best_feat.assign(n, -1);
  }
  void reset_scan() {
    std::fill(run_g.begin(), run_g.end(), 0.0);
    std::fill(run_h.begin(), run_h.end(), 0.0);
    std::fill(seen.begin(), seen.end(), 0);
  }
};

}  // namespace

GbtModel train_gbt(const Eigen::Ref<const MatrixXd>& x,
                   const std::vector<int>& y, const GbtConfig& config,
                   std::uint64_t schema_hash, GbtTrainReport* report) {
  const auto n = x.rows();
  const auto n_features = static_cast<int>(x.cols());
  if (static_cast<std::size_t>(n) != y.size()) {
    throw std::invalid_argument("gbt: row/label count mismatch");
  }
  if (n < 2) throw std::invalid_argument("gbt: need at least 2 rows");
  if (x.hasNaN()) throw std::invalid_argument("gbt: NaN in features");
  if (config.n_trees < 1 || config.max_depth < 1 ||
      !(config.learning_rate > 0.0) || config.learning_rate > 1.0) {
    throw std::invalid_argument("gbt: invalid config");
  }
  const auto positives = static_cast<double>(
      std::count(y.begin(), y.end(), 1));
  if (positives == 0.0 || positives == static_cast<double>(n)) {
    throw std::invalid_argument("gbt: training labels are a single class");
  }

  GbtModel model;
  model.config = config;
  model.schema_hash = schema_hash;
  model.n_features = n_features;
  const double p0 =
      std::clamp(positives / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
  model.base_score = std::log(p0 / (1.0 - p0));

  // per-feature presort, values pulled out for sequential scans
  std::vector<std::vector<std::pair<double, int>>> sorted(n_features);
  for (int f = 0; f < n_features; ++f) {
    auto& list = sorted[f];
    list.resize(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
      list[static_cast<std::size_t>(r)] = {x(r, f), static_cast<int>(r)};
    }
    std::sort(list.begin(), list.end());
  }

  VectorXd scores = VectorXd::Constant(n, model.base_score);
  std::vector<double> grad(static_cast<std::size_t>(n));
  std::vector<double> hess(static_cast<std::size_t>(n));
  std::vector<int> position(static_cast<std::size_t>(n));
  std::vector<int> slot_of;  // arena id -> active slot, -1 when settled

  GbtTrainReport local;
  double prev_loss = mean_logloss(scores, y);

  for (int round = 0; round < config.n_trees; ++round) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double p = sigmoid(scores(r));
      grad[static_cast<std::size_t>(r)] = p - static_cast<double>(y[r]);
      hess[static_cast<std::size_t>(r)] = p * (1.0 - p);
    }

    Tree tree;
    tree.nodes.push_back(TreeNode{});
    std::fill(position.begin(), position.end(), 0);
    std::vector<int> active{0};
    std::vector<double> node_g{
        std::accumulate(grad.begin(), grad.end(), 0.0)};
    std::vector<double> node_h{
        std::accumulate(hess.begin(), hess.end(), 0.0)};

    LevelState state;
    for (int depth = 0; depth < config.max_depth && !active.empty(); ++depth) {
      const std::size_t n_active = active.size();
      slot_of.assign(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < n_active; ++s) slot_of[active[s]] = static_cast<int>(s);
      state.resize(n_active);

      for (int f = 0; f < n_features; ++f) {
        state.reset_scan();
        for (const auto& [value, row] : sorted[f]) {
          const int slot = slot_of[position[static_cast<std::size_t>(row)]];
          if (slot < 0) continue;
          if (state.seen[slot] > 0 && value > state.prev_value[slot]) {
            const double thr =
                state.prev_value[slot] + 0.5 * (value - state.prev_value[slot]);
            if (thr > state.prev_value[slot]) {
              const double gl = state.run_g[slot];
              const double hl = state.run_h[slot];
              const double gr = node_g[slot] - gl;
              const double hr = node_h[slot] - hl;
              if (hl >= config.min_child_weight &&
                  hr >= config.min_child_weight) {
                const double gain =
                    split_gain(gl, hl, gr, hr, config.lambda_l2, config.gamma);
                if (gain > state.best_gain[slot]) {
                  state.best_gain[slot] = gain;
                  state.best_feat[slot] = f;
                  state.best_thr[slot] = thr;
                  state.best_gl[slot] = gl;
                  state.best_hl[slot] = hl;
                }
              }
            }
          }
          state.run_g[slot] += grad[static_cast<std::size_t>(row)];
          state.run_h[slot] += hess[static_cast<std::size_t>(row)];
          state.prev_value[slot] = value;
          ++state.seen[slot];
        }
      }

      // apply splits with positive gain
      std::vector<int> next_active;
      std::vector<double> next_g, next_h;
      bool any_split = false;
      for (std::size_t s = 0; s < n_active; ++s) {
        if (state.best_feat[s] < 0 || !(state.best_gain[s] > 0.0)) continue;
        any_split = true;
        const int node_id = active[s];
        const int left_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{});
        const int right_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{});
        tree.nodes[node_id].feature = state.best_feat[s];
        tree.nodes[node_id].threshold = state.best_thr[s];
        tree.nodes[node_id].left = left_id;
        tree.nodes[node_id].right = right_id;
        next_active.push_back(left_id);
        next_g.push_back(state.best_gl[s]);
        next_h.push_back(state.best_hl[s]);
        next_active.push_back(right_id);
        next_g.push_back(node_g[s] - state.best_gl[s]);
        next_h.push_back(node_h[s] - state.best_hl[s]);
      }

      if (any_split) {
        for (Eigen::Index r = 0; r < n; ++r) {
          const TreeNode& node = tree.nodes[position[static_cast<std::size_t>(r)]];
          if (!node.is_leaf()) {
            position[static_cast<std::size_t>(r)] =
                x(r, node.feature) < node.threshold ? node.left : node.right;
          }
        }
      }

      // settled leaves keep their G/H via the arena-wide pass below
      if (!any_split) break;
      // stash leaf stats for nodes that did not split this level
      for (std::size_t s = 0; s < n_active; ++s) {
        if (state.best_feat[s] >= 0 && state.best_gain[s] > 0.0) continue;
        tree.nodes[active[s]].leaf =
            config.learning_rate *
            leaf_weight(node_g[s], node_h[s], config.lambda_l2);
      }
      active = std::move(next_active);
      node_g = std::move(next_g);
      node_h = std::move(next_h);
    }

    // remaining active nodes become leaves
    for (std::size_t s = 0; s < active.size(); ++s) {
      tree.nodes[active[s]].leaf =
          config.learning_rate *
          leaf_weight(node_g[s], node_h[s], config.lambda_l2);
    }

    if (tree.nodes.size() == 1) {
      // no split had positive gain; further rounds would repeat it
      local.stopped_early = true;
      break;
    }

    for (Eigen::Index r = 0; r < n; ++r) {
      scores(r) += tree.nodes[position[static_cast<std::size_t>(r)]].leaf;
    }
    model.trees.push_back(std::move(tree));
    ++local.rounds_completed;

    const double loss = mean_logloss(scores, y);
    local.train_loss.push_back(loss);
    if (loss > prev_loss + 1e-12) local.loss_monotone = false;
    prev_loss = loss;
  }

  if (report) *report = local;
  return model;
}

VectorXd predict_raw(const GbtModel& model,
                     const Eigen::Ref<const MatrixXd>& x) {
  if (static_cast<int>(x.cols()) != model.n_features) {
    throw std::invalid_argument(
        "gbt: feature width " + std::to_string(x.cols()) +
        " does not match the model's " + std::to_string(model.n_features));
  }
  VectorXd out = VectorXd::Constant(x.rows(), model.base_score);
  for (const auto& tree : model.trees) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      out(r) += tree.value(x.row(r));
    }
  }
  return out;
}

VectorXd predict_proba(const GbtModel& model,
                       const Eigen::Ref<const MatrixXd>& x) {
  VectorXd raw = predict_raw(model, x);
  for (Eigen::Index r = 0; r < raw.size(); ++r) raw(r) = sigmoid(raw(r));
  return raw;
}

namespace {

nlohmann::ordered_json node_to_json(const Tree& tree, int i) {
  const TreeNode& node = tree.nodes[i];
  if (node.is_leaf()) {
    return {{"leaf", node.leaf}};
  }
  nlohmann::ordered_json j;
  j["feat"] = node.feature;
  j["thr"] = node.threshold;
  j["left"] = node_to_json(tree, node.left);
  j["right"] = node_to_json(tree, node.right);
  return j;
}

int node_from_json(const nlohmann::json& j, Tree& tree) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(TreeNode{});
  if (j.contains("leaf")) {
    tree.nodes[id].leaf = j.at("leaf").get<double>();
    return id;
  }
  tree.nodes[id].feature = j.at("feat").get<int>();
  tree.nodes[id].threshold = j.at("thr").get<double>();
  const int left = node_from_json(j.at("left"), tree);
  tree.nodes[id].left = left;
  const int right = node_from_json(j.at("right"), tree);
  tree.nodes[id].right = right;
  return id;
}

std::string hash_hex(std::uint64_t h) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

}  // namespace

std::string model_to_json(const GbtModel& model) {
  nlohmann::ordered_json j;
  j["base_score"] = model.base_score;
  j["config"] = {{"n_trees", model.config.n_trees},
                 {"learning_rate", model.config.learning_rate},
                 {"max_depth", model.config.max_depth},
                 {"lambda_l2", model.config.lambda_l2},
                 {"gamma", model.config.gamma},
                 {"min_child_weight", model.config.min_child_weight},
                 {"seed", model.config.seed}};
  j["schema_hash"] = hash_hex(model.schema_hash);
  j["n_features"] = model.n_features;
  auto& trees = j["trees"] = nlohmann::ordered_json::array();
  for (const auto& tree : model.trees) {
    trees.push_back(node_to_json(tree, 0));
  }
  return j.dump(2) + "\n";
}

GbtModel model_from_json(std::istream& in) {
  nlohmann::json j;
  in >> j;
  GbtModel model;
  model.base_score = j.at("base_score").get<double>();
  const auto& c = j.at("config");
  model.config.n_trees = c.at("n_trees").get<int>();
  model.config.learning_rate = c.at("learning_rate").get<double>();
  model.config.max_depth = c.at("max_depth").get<int>();
  model.config.lambda_l2 = c.at("lambda_l2").get<double>();
  model.config.gamma = c.at("gamma").get<double>();
  model.config.min_child_weight = c.at("min_child_weight").get<double>();
  model.config.seed = c.at("seed").get<std::uint64_t>();
  model.schema_hash =
      std::stoull(j.at("schema_hash").get<std::string>(), nullptr, 16);
  model.n_features = j.at("n_features").get<int>();
  for (const auto& t : j.at("trees")) {
    Tree tree;
    node_from_json(t, tree);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

void save_model(const std::string& path, const GbtModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << model_to_json(model);
}

GbtModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  return model_from_json(in);
}

}  // namespace roadsafe
