#include "motility/classical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "motility/binary_io.hpp"
#include "motility/error.hpp"
#include "motility/log.hpp"
#include "motility/parallel.hpp"
#include "motility/rng.hpp"

namespace motility::classical {

void Dataset2D::validate() const {
  if (rows == 0) throw Error(Errc::EmptyDataset, "dataset has no rows");
  if (x.size() != rows * cols || y.size() != rows || (!ids.empty() && ids.size() != rows)) {
    throw Error(Errc::ShapeMismatch, "dataset arrays disagree with its " + std::to_string(rows) + " x " +
                                         std::to_string(cols) + " shape");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::isfinite(y[i])) throw Error(Errc::BadNumeric, "non-finite target in row " + std::to_string(i));
    for (std::size_t j = 0; j < cols; ++j) {
      if (!std::isfinite(at(i, j))) {
        throw Error(Errc::BadNumeric, "non-finite feature at row " + std::to_string(i) + ", column " +
                                          std::to_string(j));
      }
    }
  }
}

Dataset2D Dataset2D::subset(std::span<const std::size_t> indices) const {
  Dataset2D out(indices.size(), cols);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i * cols), cols,
                out.x.begin() + static_cast<std::ptrdiff_t>(k * cols));
    out.y[k] = y[i];
    if (!ids.empty()) out.ids[k] = ids[i];
  }
  return out;
}

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::ZeroR: return "zeror";
    case ModelKind::SimpleLinear: return "linear";
    case ModelKind::ElasticNet: return "elastic-net";
    case ModelKind::RandomTree: return "random-tree";
    case ModelKind::RandomForest: return "random-forest";
  }
  return "?";
}

double Tree::predict(std::span<const double> row) const {
  std::size_t n = 0;
  while (nodes[n].feature >= 0) {
    n = static_cast<std::size_t>(row[static_cast<std::size_t>(nodes[n].feature)] <= nodes[n].threshold
                                     ? nodes[n].left
                                     : nodes[n].right);
  }
  return nodes[n].value;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double Model::predict(std::span<const double> row) const {
  if (row.size() != input_dim) {
    throw Error(Errc::ShapeMismatch, std::string(model_kind_name(kind)) + " model expects " +
                                         std::to_string(input_dim) + " features, got " + std::to_string(row.size()));
  }
  switch (kind) {
    case ModelKind::ZeroR: return intercept;
    case ModelKind::SimpleLinear:
      return attribute < 0 ? intercept : intercept + slope * row[static_cast<std::size_t>(attribute)];
    case ModelKind::ElasticNet: {
      double s = intercept;
      for (std::size_t j = 0; j < coefficients.size(); ++j) s += coefficients[j] * row[j];
      return s;
    }
    case ModelKind::RandomTree:
    case ModelKind::RandomForest: {
      double s = 0.0;
      for (const auto& t : trees) s += t.predict(row);
      return s / static_cast<double>(trees.size());
    }
  }
  return intercept;
}

std::vector<double> Model::predict(const Dataset2D& data) const {
  std::vector<double> out(data.rows);
  for (std::size_t i = 0; i < data.rows; ++i) out[i] = predict(data.row(i));
  return out;
}

bool operator==(const Model& a, const Model& b) {
  auto same_tree = [](const Tree& s, const Tree& t) {
    if (s.nodes.size() != t.nodes.size()) return false;
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
      const auto &p = s.nodes[i], &q = t.nodes[i];
      if (p.feature != q.feature || p.threshold != q.threshold || p.left != q.left || p.right != q.right ||
          p.value != q.value) {
        return false;
      }
    }
    return true;
  };
  if (a.kind != b.kind || a.input_dim != b.input_dim || a.intercept != b.intercept ||
      a.attribute != b.attribute || a.slope != b.slope || a.coefficients != b.coefficients ||
      a.trees.size() != b.trees.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.trees.size(); ++i) {
    if (!same_tree(a.trees[i], b.trees[i])) return false;
  }
  return true;
}

namespace {

constexpr std::uint32_t kFormatVersion = 1;

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void Model::save(std::ostream& out) const {
  binio::write_magic(out, "MCM1");
  binio::write_pod<std::uint32_t>(out, kFormatVersion);
  binio::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(kind));
  binio::write_pod<std::uint64_t>(out, input_dim);
  binio::write_pod<double>(out, intercept);
  binio::write_pod<std::int64_t>(out, attribute);
  binio::write_pod<double>(out, slope);
  binio::write_doubles(out, coefficients);
  binio::write_pod<std::uint64_t>(out, trees.size());
  for (const auto& t : trees) {
    binio::write_pod<std::uint64_t>(out, t.nodes.size());
    for (const auto& n : t.nodes) {
      binio::write_pod<std::int32_t>(out, n.feature);
      binio::write_pod<double>(out, n.threshold);
      binio::write_pod<std::int32_t>(out, n.left);
      binio::write_pod<std::int32_t>(out, n.right);
      binio::write_pod<double>(out, n.value);
    }
  }
}

Model Model::load(std::istream& in) {
  if (!binio::read_magic(in, "MCM1")) throw Error(Errc::BadFormat, "not a classical model container");
  const auto version = binio::read_pod<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw Error(Errc::BadFormat, "unsupported classical model version " + std::to_string(version));
  }
  Model m;
  const auto kind = binio::read_pod<std::uint8_t>(in);
  if (kind > static_cast<std::uint8_t>(ModelKind::RandomForest)) {
    throw Error(Errc::BadFormat, "unknown classical model kind " + std::to_string(kind));
  }
  m.kind = static_cast<ModelKind>(kind);
  m.input_dim = binio::read_pod<std::uint64_t>(in);
  m.intercept = binio::read_pod<double>(in);
  m.attribute = binio::read_pod<std::int64_t>(in);
  m.slope = binio::read_pod<double>(in);
  m.coefficients = binio::read_doubles(in);
  const auto n_trees = binio::read_pod<std::uint64_t>(in);
  if (n_trees > 1'000'000) throw Error(Errc::BadFormat, "implausible tree count");
  m.trees.resize(n_trees);
  for (auto& t : m.trees) {
    const auto n_nodes = binio::read_pod<std::uint64_t>(in);
    if (n_nodes == 0 || n_nodes > (std::uint64_t{1} << 28)) throw Error(Errc::BadFormat, "implausible node count");
    t.nodes.resize(n_nodes);
    for (auto& n : t.nodes) {
      n.feature = binio::read_pod<std::int32_t>(in);
      n.threshold = binio::read_pod<double>(in);
      n.left = binio::read_pod<std::int32_t>(in);
      n.right = binio::read_pod<std::int32_t>(in);
      n.value = binio::read_pod<double>(in);
    }
    for (const auto& n : t.nodes) {
      if (n.feature >= 0 &&
          (n.left <= 0 || n.right <= 0 || static_cast<std::uint64_t>(n.left) >= n_nodes ||
           static_cast<std::uint64_t>(n.right) >= n_nodes || static_cast<std::uint64_t>(n.feature) >= m.input_dim)) {
        throw Error(Errc::BadFormat, "corrupt tree node");
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

Model fit_zeror(const Dataset2D& data) {
  data.validate();
  Model m;
  m.kind = ModelKind::ZeroR;
  m.input_dim = data.cols;
  m.intercept = mean_of(data.y);
  return m;
}

Model fit_simple_linear(const Dataset2D& data) {
  data.validate();
  if (data.cols < 1 || data.rows < 2) {
    throw Error(Errc::EmptyDataset, "simple linear regression needs at least 2 rows and 1 attribute");
  }
  Model m;
  m.kind = ModelKind::SimpleLinear;
  m.input_dim = data.cols;
  const double n = static_cast<double>(data.rows);
  const double y_mean = mean_of(data.y);
  m.intercept = y_mean;
  double syy = 0.0;
  for (double v : data.y) syy += (v - y_mean) * (v - y_mean);
  if (syy == 0.0) {
    warn("DegenerateTarget: all targets equal " + std::to_string(y_mean) + "; fitting an intercept-only model");
    return m;
  }
  double best_sse = syy;
  for (std::size_t j = 0; j < data.cols; ++j) {
    double x_mean = 0.0;
    for (std::size_t i = 0; i < data.rows; ++i) x_mean += data.at(i, j);
    x_mean /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < data.rows; ++i) {
      const double dx = data.at(i, j) - x_mean;
      sxx += dx * dx;
      sxy += dx * (data.y[i] - y_mean);
    }
    if (sxx <= 0.0) continue;
    const double slope = sxy / sxx;
    const double intercept = y_mean - slope * x_mean;
    double sse = 0.0;
    for (std::size_t i = 0; i < data.rows; ++i) {
      const double r = data.y[i] - intercept - slope * data.at(i, j);
      sse += r * r;
    }
    if (sse < best_sse || (m.attribute < 0 && sse <= best_sse)) {
      best_sse = sse;
      m.attribute = static_cast<std::int64_t>(j);
      m.slope = slope;
      m.intercept = intercept;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

Model fit_elastic_net(const Dataset2D& data, const ElasticNetParams& params, ElasticNetTrace* trace) {
  data.validate();
  if (params.lambda < 0.0 || params.alpha_mix < 0.0 || params.alpha_mix > 1.0) {
    throw Error(Errc::Usage, "elastic net needs lambda >= 0 and mix in [0, 1]");
  }
  const std::size_t n = data.rows;
  const std::size_t d = data.cols;
  const double inv_n = 1.0 / static_cast<double>(n);
  const Standardizer st = Standardizer::fit(data);
  const double y_mean = mean_of(data.y);

  // Column-major standardized features for cache-friendly coordinate passes.
  std::vector<double> z(n * d);
  std::vector<bool> active(d);
  for (std::size_t j = 0; j < d; ++j) {
    active[j] = st.stddev[j] > 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[j * n + i] = active[j] ? (data.at(i, j) - st.mean[j]) / st.stddev[j] : 0.0;
    }
  }
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = data.y[i] - y_mean;
  std::vector<double> beta(d, 0.0);

  const double l1 = params.lambda * params.alpha_mix;
  const double l2 = params.lambda * (1.0 - params.alpha_mix);
  auto objective = [&]() {
    double rss = 0.0;
    for (double r : residual) rss += r * r;
    double a = 0.0, b = 0.0;
    for (double v : beta) {
      a += std::abs(v);
      b += v * v;
    }
    return 0.5 * inv_n * rss + params.lambda * (params.alpha_mix * a + 0.5 * (1.0 - params.alpha_mix) * b);
  };

  ElasticNetTrace local;
  double previous = objective();
  for (int sweep = 0; sweep < params.max_iter; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (!active[j]) continue;
      const double* col = &z[j * n];
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += col[i] * residual[i];
      rho = rho * inv_n + beta[j];  // columns have unit mean square
      double updated = 0.0;
      if (rho > l1) updated = (rho - l1) / (1.0 + l2);
      else if (rho < -l1) updated = (rho + l1) / (1.0 + l2);
      const double delta = updated - beta[j];
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) residual[i] -= delta * col[i];
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    const double current = objective();
    local.objective.push_back(current);
    local.sweeps = sweep + 1;
    if (current > previous + 1e-9 * std::max(1.0, std::abs(previous))) {
      throw Error(Errc::BadNumeric, "elastic net objective increased during a sweep");
    }
    previous = current;
    if (max_change < params.tol) {
      local.converged = true;
      break;
    }
  }
  if (!local.converged) {
    warn("NotConverged: elastic net stopped after " + std::to_string(params.max_iter) +
         " sweeps; keeping the last iterate");
  }

  Model m;
  m.kind = ModelKind::ElasticNet;
  m.input_dim = d;
  m.coefficients.assign(d, 0.0);
  m.intercept = y_mean;
  for (std::size_t j = 0; j < d; ++j) {
    if (!active[j]) continue;
    m.coefficients[j] = beta[j] / st.stddev[j];
    m.intercept -= m.coefficients[j] * st.mean[j];
  }
  if (trace) *trace = std::move(local);
  return m;
}

// ---------------------------------------------------------------------------

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Dataset2D& data, int max_depth, int min_leaf, int features_per_node, Rng& rng)
      : data_(data), max_depth_(max_depth), min_leaf_(std::max(1, min_leaf)),
        features_(std::clamp(features_per_node, 1, static_cast<int>(std::max<std::size_t>(1, data.cols)))),
        rng_(rng), order_(data.cols) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  Tree build(std::vector<std::size_t> rows) {
    Tree tree;
    tree.nodes.emplace_back();
    grow(tree, 0, rows, 0);
    return tree;
  }

 private:
  void grow(Tree& tree, std::size_t node, std::vector<std::size_t>& rows, int depth) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t r : rows) {
      sum += data_.y[r];
      sq += data_.y[r] * data_.y[r];
    }
    const double count = static_cast<double>(rows.size());
    tree.nodes[node].value = sum / count;
    if ((max_depth_ >= 0 && depth >= max_depth_) || rows.size() < 2 * static_cast<std::size_t>(min_leaf_) ||
        data_.cols == 0) {
      return;
    }
    const double parent_sse = sq - sum * sum / count;
    if (parent_sse <= 1e-12 * std::max(1.0, sq)) return;

    // random feature subset by partial Fisher-Yates
    for (int k = 0; k < features_; ++k) {
      const std::size_t pick = static_cast<std::size_t>(k) + rng_.below(order_.size() - static_cast<std::size_t>(k));
      std::swap(order_[static_cast<std::size_t>(k)], order_[pick]);
    }
    std::vector<std::size_t> candidates(order_.begin(), order_.begin() + features_);
    std::sort(candidates.begin(), candidates.end());

    double best_sse = parent_sse - 1e-12 * std::max(1.0, parent_sse);
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted(rows);
    for (std::size_t f : candidates) {
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        const double xa = data_.at(a, f), xb = data_.at(b, f);
        return xa < xb || (xa == xb && a < b);
      });
      double left_sum = 0.0, left_sq = 0.0;
      for (std::size_t k = 1; k < sorted.size(); ++k) {
        const double yv = data_.y[sorted[k - 1]];
        left_sum += yv;
        left_sq += yv * yv;
        if (k < static_cast<std::size_t>(min_leaf_) || sorted.size() - k < static_cast<std::size_t>(min_leaf_)) {
          continue;
        }
        const double lo = data_.at(sorted[k - 1], f);
        const double hi = data_.at(sorted[k], f);
        if (!(lo < hi)) continue;
        const double nl = static_cast<double>(k);
        const double nr = count - nl;
        const double right_sum = sum - left_sum;
        const double right_sq = sq - left_sq;
        const double sse = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
        if (sse < best_sse) {
          best_sse = sse;
          best_feature = static_cast<int>(f);
          double mid = lo + 0.5 * (hi - lo);
          if (!(mid < hi)) mid = lo;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (data_.at(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto right_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node].feature = best_feature;
    tree.nodes[node].threshold = best_threshold;
    tree.nodes[node].left = left_id;
    tree.nodes[node].right = right_id;
    grow(tree, static_cast<std::size_t>(left_id), left, depth + 1);
    grow(tree, static_cast<std::size_t>(right_id), right, depth + 1);
  }

  const Dataset2D& data_;
  int max_depth_;
  int min_leaf_;
  int features_;
  Rng& rng_;
  std::vector<std::size_t> order_;
};

int default_subsample(std::size_t d) { return static_cast<int>((d + 2) / 3); }

Tree grow_tree(const Dataset2D& data, std::vector<std::size_t> rows, int max_depth, int min_leaf, int features,
               Rng& rng) {
  TreeBuilder builder(data, max_depth, min_leaf, features, rng);
  return builder.build(std::move(rows));
}

}  // namespace

Model fit_random_tree(const Dataset2D& data, const TreeParams& params) {
  data.validate();
  Rng rng(params.seed);
  std::vector<std::size_t> rows(data.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const int features = params.feature_subsample > 0 ? params.feature_subsample : default_subsample(data.cols);
  Model m;
  m.kind = ModelKind::RandomTree;
  m.input_dim = data.cols;
  m.trees.push_back(grow_tree(data, std::move(rows), params.max_depth, params.min_leaf, features, rng));
  return m;
}

Model fit_random_forest(const Dataset2D& data, const ForestParams& params) {
  data.validate();
  if (params.n_trees < 1) throw Error(Errc::Usage, "random forest needs at least one tree");
  Model m;
  m.kind = ModelKind::RandomForest;
  m.input_dim = data.cols;
  m.trees.resize(static_cast<std::size_t>(params.n_trees));
  const int features = default_subsample(data.cols);
  parallel_for(m.trees.size(), [&](std::size_t t) {
    Rng rng(params.seed + t);
    std::vector<std::size_t> rows(data.rows);
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(data.rows));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    m.trees[t] = grow_tree(data, std::move(rows), params.max_depth, params.min_leaf, features, rng);
  });
  return m;
}

// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const Dataset2D& data) {
  data.validate();
  Standardizer s;
  s.mean.assign(data.cols, 0.0);
  s.stddev.assign(data.cols, 0.0);
  const double n = static_cast<double>(data.rows);
  for (std::size_t i = 0; i < data.rows; ++i)
    for (std::size_t j = 0; j < data.cols; ++j) s.mean[j] += data.at(i, j);
  for (double& m : s.mean) m /= n;
  for (std::size_t i = 0; i < data.rows; ++i)
    for (std::size_t j = 0; j < data.cols; ++j) {
      const double dv = data.at(i, j) - s.mean[j];
      s.stddev[j] += dv * dv;
    }
  for (double& v : s.stddev) {
    v = std::sqrt(v / n);
    if (v < 1e-12) v = 0.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
  if (row.size() != mean.size()) throw Error(Errc::ShapeMismatch, "standardizer width mismatch");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = stddev[j] > 0.0 ? (row[j] - mean[j]) / stddev[j] : 0.0;
  return out;
}

void Standardizer::apply(Dataset2D& data) const {
  for (std::size_t i = 0; i < data.rows; ++i) {
    const auto z = apply(data.row(i));
    std::copy(z.begin(), z.end(), data.x.begin() + static_cast<std::ptrdiff_t>(i * data.cols));
  }
}

void Standardizer::save(std::ostream& out) const {
  binio::write_doubles(out, mean);
  binio::write_doubles(out, stddev);
}

Standardizer Standardizer::load(std::istream& in) {
  Standardizer s;
  s.mean = binio::read_doubles(in);
  s.stddev = binio::read_doubles(in);
  if (s.mean.size() != s.stddev.size()) throw Error(Errc::BadFormat, "standardizer arrays differ in length");
  return s;
}

void Pipeline::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  binio::write_magic(out, "MCM1");
  binio::write_pod<std::uint32_t>(out, kFormatVersion);
  binio::write_pod<std::uint8_t>(out, 0xFF);  // pipeline container tag
  binio::write_string(out, method);
  binio::write_string(out, feature_set);
  binio::write_pod<std::uint8_t>(out, include_concentration ? 1 : 0);
  standardizer.save(out);
  binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(models.size()));
  for (const auto& m : models) m.save(out);
  binio::atomic_write(path, out.str());
}

Pipeline Pipeline::load(const std::filesystem::path& path) {
  std::istringstream in(binio::read_file(path));
  try {
    if (!binio::read_magic(in, "MCM1")) throw Error(Errc::BadFormat, "not a classical model file");
    if (binio::read_pod<std::uint32_t>(in) != kFormatVersion) throw Error(Errc::BadFormat, "unsupported version");
    if (binio::read_pod<std::uint8_t>(in) != 0xFF) throw Error(Errc::BadFormat, "not a pipeline container");
    Pipeline p;
    p.method = binio::read_string(in);
    p.feature_set = binio::read_string(in);
    p.include_concentration = binio::read_pod<std::uint8_t>(in) != 0;
    p.standardizer = Standardizer::load(in);
    const auto count = binio::read_pod<std::uint32_t>(in);
    if (count > 16) throw Error(Errc::BadFormat, "implausible model count");
    for (std::uint32_t i = 0; i < count; ++i) p.models.push_back(Model::load(in));
    return p;
  } catch (const Error& e) {
    throw Error(Errc::UnreadableCheckpoint, path.string() + ": " + e.detail());
  }
}

}  // namespace motility::classical
