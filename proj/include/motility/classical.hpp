#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace motility::classical {

// Row-major n x d design matrix with one target column.
struct Dataset2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> ids;

  Dataset2D() = default;
  Dataset2D(std::size_t n, std::size_t d) : rows(n), cols(d), x(n * d, 0.0), y(n, 0.0), ids(n) {}

  std::span<const double> row(std::size_t i) const { return {x.data() + i * cols, cols}; }
  double& at(std::size_t i, std::size_t j) { return x[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return x[i * cols + j]; }

  // EmptyDataset for n = 0, BadNumeric for non-finite entries, ShapeMismatch
  // for inconsistent sizes.
  void validate() const;
  Dataset2D subset(std::span<const std::size_t> indices) const;
};

enum class ModelKind : std::uint8_t { ZeroR = 0, SimpleLinear = 1, ElasticNet = 2, RandomTree = 3, RandomForest = 4 };

const char* model_kind_name(ModelKind kind);

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict(std::span<const double> row) const;
  int depth() const;
};

struct Model {
  ModelKind kind = ModelKind::ZeroR;
  std::size_t input_dim = 0;
  double intercept = 0.0;         // ZeroR mean, linear intercepts
  std::int64_t attribute = -1;    // simple linear
  double slope = 0.0;             // simple linear
  std::vector<double> coefficients;  // elastic net, original feature scale
  std::vector<Tree> trees;        // one for a random tree, many for a forest

  double predict(std::span<const double> row) const;
  std::vector<double> predict(const Dataset2D& data) const;

  void save(std::ostream& out) const;
  static Model load(std::istream& in);
  friend bool operator==(const Model&, const Model&);
};

Model fit_zeror(const Dataset2D& data);

// Best single attribute by SSE, lowest index on ties. Warns DegenerateTarget
// and returns an intercept-only model when y is constant.
Model fit_simple_linear(const Dataset2D& data);

struct ElasticNetParams {
  double lambda = 0.01;
  double alpha_mix = 0.5;
  int max_iter = 1000;
  double tol = 1e-6;
};

struct ElasticNetTrace {
  std::vector<double> objective;  // after each full sweep
  int sweeps = 0;
  bool converged = false;
};

// Cyclic coordinate descent on internally standardized features; warns
// NotConverged and keeps the last iterate when max_iter is reached.
Model fit_elastic_net(const Dataset2D& data, const ElasticNetParams& params = {}, ElasticNetTrace* trace = nullptr);

struct TreeParams {
  int max_depth = -1;         // negative: unlimited, 0: a single leaf
  int min_leaf = 5;
  int feature_subsample = 0;  // 0: ceil(d / 3)
  std::uint64_t seed = 1;
};

Model fit_random_tree(const Dataset2D& data, const TreeParams& params = {});

struct ForestParams {
  int n_trees = 100;
  int max_depth = -1;
  int min_leaf = 5;
  bool bootstrap = true;
  std::uint64_t seed = 1;
};

// Tree i draws from seed + i: bootstrap rows first, then split features
// (ceil(d / 3) per node). Trees are grown in parallel.
Model fit_random_forest(const Dataset2D& data, const ForestParams& params = {});

// Column standardization with training statistics; constant columns map to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const Dataset2D& data);
  void apply(Dataset2D& data) const;
  std::vector<double> apply(std::span<const double> row) const;
  void save(std::ostream& out) const;
  static Standardizer load(std::istream& in);
};

// One classical method trained per target plus the feature standardizer.
struct Pipeline {
  std::string method;        // zeror, linear, elastic-net, random-tree, random-forest
  std::string feature_set;   // tamura, participant, fused
  bool include_concentration = false;
  Standardizer standardizer;
  std::vector<Model> models;  // progressive, non-progressive, immotile

  void save(const std::filesystem::path& path) const;
  static Pipeline load(const std::filesystem::path& path);
};

}  // namespace motility::classical
