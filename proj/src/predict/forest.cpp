#include "noisenet/predict/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <optional>
#include <thread>

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/rng.hpp"

namespace noisenet::predict {

namespace {

/// Features as dense ranks into their sorted distinct values.
struct Coded {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::vector<std::uint32_t>> codes;  // [feature][row]
  std::vector<std::vector<double>> values;        // [feature][rank]
  std::vector<int> y;
};

Coded encode(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  Coded c;
  c.n = static_cast<std::size_t>(x.rows());
  c.d = static_cast<std::size_t>(x.cols());
  c.y = y;
  c.codes.resize(c.d);
  c.values.resize(c.d);
  for (std::size_t f = 0; f < c.d; ++f) {
    std::vector<double> v(x.col(f).data(), x.col(f).data() + c.n);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    auto& codes = c.codes[f];
    codes.resize(c.n);
    for (std::size_t i = 0; i < c.n; ++i) {
      codes[i] = static_cast<std::uint32_t>(std::lower_bound(v.begin(), v.end(), x(i, f)) - v.begin());
    }
    c.values[f] = std::move(v);
  }
  return c;
}

struct Split {
  bool found = false;
  double score = 0;  // weighted child impurity, lower is better
  std::size_t feature = 0;
  std::uint32_t last_left = 0;  // largest rank sent left
  double threshold = 0;
};

/// Sum over both children of W * gini, given weighted class counts.
inline double children_cost(double l0, double l1, double r0, double r1) {
  const double wl = l0 + l1;
  const double wr = r0 + r1;
  return (wl - (l0 * l0 + l1 * l1) / wl) + (wr - (r0 * r0 + r1 * r1) / wr);
}

class TreeBuilder {
 public:
  TreeBuilder(const Coded& data, const ForestParams& params, std::size_t mtry, std::uint64_t seed)
      : data_(data), params_(params), mtry_(mtry), rng_(seed), importance_(data.d, 0.0) {
    std::size_t max_k = 0;
    for (const auto& v : data.values) max_k = std::max(max_k, v.size());
    h0_.assign(max_k, 0.0);
    h1_.assign(max_k, 0.0);
  }

  std::vector<RandomForest::Node> build() {
    weight_.assign(data_.n, 0);
    for (std::size_t i = 0; i < data_.n; ++i) ++weight_[rng_.below(data_.n)];
    for (std::size_t i = 0; i < data_.n; ++i) {
      if (weight_[i] > 0) idx_.push_back(static_cast<std::uint32_t>(i));
    }
    grow(0, idx_.size(), 0);
    return std::move(nodes_);
  }

  const std::vector<double>& importance() const { return importance_; }

 private:
  struct Frame {
    std::size_t begin, end, depth;
    int node;
  };

  void grow(std::size_t begin, std::size_t end, std::size_t depth) {
    std::vector<Frame> stack;
    nodes_.push_back({});
    stack.push_back({begin, end, depth, 0});
    while (!stack.empty()) {
      const auto fr = stack.back();
      stack.pop_back();
      double w0 = 0, w1 = 0;
      for (std::size_t k = fr.begin; k < fr.end; ++k) {
        const auto i = idx_[k];
        (data_.y[i] ? w1 : w0) += weight_[i];
      }
      nodes_[fr.node].p1 = w1 / (w0 + w1);
      const std::size_t m = fr.end - fr.begin;
      if (w0 == 0 || w1 == 0 || m < 2 * params_.min_leaf || (params_.max_depth && fr.depth >= params_.max_depth)) {
        continue;
      }
      const auto split = best_split(fr.begin, fr.end, w0, w1);
      if (!split.found) continue;

      const double parent = (w0 + w1) - (w0 * w0 + w1 * w1) / (w0 + w1);
      importance_[split.feature] += parent - split.score;
      const auto& codes = data_.codes[split.feature];
      const auto mid = std::stable_partition(idx_.begin() + fr.begin, idx_.begin() + fr.end,
                                             [&](std::uint32_t i) { return codes[i] <= split.last_left; }) -
                       idx_.begin();
      const int left = static_cast<int>(nodes_.size());
      nodes_.push_back({});
      nodes_.push_back({});
      auto& node = nodes_[fr.node];
      node.feature = static_cast<int>(split.feature);
      node.threshold = split.threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({static_cast<std::size_t>(mid), fr.end, fr.depth + 1, left + 1});
      stack.push_back({fr.begin, static_cast<std::size_t>(mid), fr.depth + 1, left});
    }
  }

  Split best_split(std::size_t begin, std::size_t end, double w0, double w1) {
    std::vector<std::size_t> order(data_.d);
    std::iota(order.begin(), order.end(), 0);
    Split best;
    std::size_t visited = 0;
    for (std::size_t k = 0; k < data_.d; ++k) {
      const auto j = k + rng_.below(data_.d - k);
      std::swap(order[k], order[j]);
      const auto f = order[k];
      Split s = scan_feature(f, begin, end, w0, w1);
      if (!s.found) continue;  // constant in this node
      ++visited;
      if (!best.found || s.score < best.score) best = s;
      if (visited >= mtry_) break;
    }
    return best;
  }

  Split scan_feature(std::size_t f, std::size_t begin, std::size_t end, double w0, double w1) {
    const auto& codes = data_.codes[f];
    const auto& values = data_.values[f];
    const std::size_t m = end - begin;
    const std::size_t min_leaf = params_.min_leaf;
    Split best;
    best.feature = f;
    // Walk distinct ranks in ascending order with running left counts.
    double l0 = 0, l1 = 0;
    std::size_t left_n = 0;
    auto consider = [&](std::uint32_t rank, std::uint32_t next_rank) {
      if (left_n < min_leaf || m - left_n < min_leaf) return;
      const double cost = children_cost(l0, l1, w0 - l0, w1 - l1);
      if (!best.found || cost < best.score) {
        best.found = true;
        best.score = cost;
        best.last_left = rank;
        best.threshold = 0.5 * (values[rank] + values[next_rank]);
      }
    };
    if (m * 4 >= values.size()) {
      std::uint32_t lo = std::numeric_limits<std::uint32_t>::max(), hi = 0;
      std::vector<std::uint32_t>& cnt = count_;
      cnt.assign(values.size(), 0);
      for (std::size_t k = begin; k < end; ++k) {
        const auto i = idx_[k];
        const auto r = codes[i];
        (data_.y[i] ? h1_[r] : h0_[r]) += weight_[i];
        ++cnt[r];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      std::optional<std::uint32_t> prev;
      for (std::uint32_t r = lo; r <= hi; ++r) {
        if (cnt[r] == 0) continue;
        if (prev) consider(*prev, r);
        l0 += h0_[r];
        l1 += h1_[r];
        left_n += cnt[r];
        h0_[r] = h1_[r] = 0;
        prev = r;
      }
    } else {
      auto& buf = pairs_;
      buf.clear();
      for (std::size_t k = begin; k < end; ++k) buf.emplace_back(codes[idx_[k]], idx_[k]);
      std::sort(buf.begin(), buf.end());
      for (std::size_t k = 0; k < buf.size(); ++k) {
        if (k > 0 && buf[k].first != buf[k - 1].first) consider(buf[k - 1].first, buf[k].first);
        const auto i = buf[k].second;
        (data_.y[i] ? l1 : l0) += weight_[i];
        ++left_n;
      }
    }
    return best;
  }

  const Coded& data_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<double> importance_;
  std::vector<double> h0_, h1_;
  std::vector<std::uint32_t> count_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_;
  std::vector<std::uint32_t> weight_;
  std::vector<std::uint32_t> idx_;
  std::vector<RandomForest::Node> nodes_;
};

}  // namespace

RandomForest RandomForest::fit(const Eigen::MatrixXd& x, const std::vector<int>& y, const ForestParams& params,
                               std::uint64_t seed) {
  if (x.rows() == 0 || x.cols() == 0) throw DomainError("empty training set");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DomainError("rows and labels differ in length");
  std::array<std::size_t, 2> per_class{};
  for (int v : y) {
    if (v != 0 && v != 1) throw DomainError(fmt::format("label {} is not 0 or 1", v));
    ++per_class[v];
  }
  if (per_class[0] == 0 || per_class[1] == 0) throw DomainError("training set has a single class");
  if (params.n_trees == 0) throw DomainError("n_trees must be positive");
  if (params.min_leaf == 0) throw DomainError("min_leaf must be positive");
  if (!x.allFinite()) throw DomainError("training rows contain non-finite values");

  const auto data = encode(x, y);
  const std::size_t mtry = params.features_per_split
                               ? std::min<std::size_t>(params.features_per_split, data.d)
                               : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(data.d))));

  RandomForest forest;
  forest.trees_.resize(params.n_trees);
  std::vector<std::vector<double>> per_tree(params.n_trees);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < params.n_trees; t = next++) {
      TreeBuilder b(data, params, mtry, derive_seed(seed, t));
      forest.trees_[t] = b.build();
      per_tree[t] = b.importance();
    }
  };
  unsigned threads = params.threads ? params.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, params.n_trees));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  // Per-tree normalized decrease, averaged over trees, scaled to 100.
  forest.importances_.assign(data.d, 0.0);
  for (const auto& imp : per_tree) {
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total <= 0) continue;
    for (std::size_t f = 0; f < data.d; ++f) forest.importances_[f] += imp[f] / total;
  }
  const double sum = std::accumulate(forest.importances_.begin(), forest.importances_.end(), 0.0);
  for (auto& v : forest.importances_) v = sum > 0 ? 100.0 * v / sum : 100.0 / static_cast<double>(data.d);
  return forest;
}

double RandomForest::predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  double s = 0;
  for (const auto& tree : trees_) {
    int k = 0;
    while (tree[k].feature >= 0) k = row(tree[k].feature) <= tree[k].threshold ? tree[k].left : tree[k].right;
    s += tree[k].p1;
  }
  return s / static_cast<double>(trees_.size());
}

std::vector<int> RandomForest::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
  return out;
}

std::size_t RandomForest::node_count() const {
  std::size_t n = 0;
  for (const auto& t : trees_) n += t.size();
  return n;
}

}  // namespace noisenet::predict
