#pragma once

#include "ksh/common.hpp"

#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace ksh {

/// Open metric ball: members are exactly the ids at distance < radius
/// from the center (center included at distance 0), sorted ascending.
struct BallIndex {
  int center = -1;
  double radius = 0.0;
  std::vector<int> members;
  double mass = 0.0;
};

/// Lattice structure kept for grid-built domains; axis 0 is the slowest
/// index in the flattened point id.
struct GridInfo {
  int dim = 0;
  std::array<int, 3> npts{1, 1, 1};        // counts including collar
  std::array<double, 3> origin{0, 0, 0};   // coordinate of index 0 per axis
  std::array<double, 3> spacing{0, 0, 0};

  int flatten(const std::array<int, 3>& idx) const {
    int id = 0;
    for (int a = 0; a < dim; ++a) id = id * npts[a] + idx[a];
    return id;
  }
  std::array<int, 3> unflatten(int id) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      idx[a] = id % npts[a];
      id /= npts[a];
    }
    return idx;
  }
};

struct TriangleAudit {
  int samples = 0;
  int violations = 0;
  double worst_excess = 0.0;
};

// Finite weighted metric space with an interior/exterior partition.
// The metric is either implicit Euclidean over stored coordinates (ball
// queries via a uniform-bin index, no O(n^2) storage) or an explicit dense
// matrix (graph shortest paths, user-supplied matrices). Immutable after
// construction; safe for concurrent reads.
class PointCloudSpace {
 public:
  enum class MetricKind { euclidean, dense };

  static PointCloudSpace from_coords(int dim, std::vector<double> coords,
                                     std::vector<double> weights,
                                     std::vector<uint8_t> interior,
                                     std::optional<GridInfo> grid = std::nullopt) {
    PointCloudSpace s;
    s.metric_kind_ = MetricKind::euclidean;
    s.coord_dim_ = dim;
    s.coords_ = std::move(coords);
    s.weights_ = std::move(weights);
    s.interior_ = std::move(interior);
    s.grid_ = grid;
    s.finalize();
    return s;
  }

  static PointCloudSpace from_dense(Eigen::MatrixXd metric, std::vector<double> weights,
                                    std::vector<uint8_t> interior) {
    PointCloudSpace s;
    s.metric_kind_ = MetricKind::dense;
    s.dense_ = std::move(metric);
    s.weights_ = std::move(weights);
    s.interior_ = std::move(interior);
    s.finalize();
    return s;
  }

  // -- accessors -----------------------------------------------------------

  int size() const { return static_cast<int>(weights_.size()); }
  MetricKind metric_kind() const { return metric_kind_; }
  bool is_interior(int i) const { return interior_[static_cast<std::size_t>(i)] != 0; }
  double weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<uint8_t>& interior_flags() const { return interior_; }
  const std::vector<int>& interior_ids() const { return interior_ids_; }
  const std::vector<int>& exterior_ids() const { return exterior_ids_; }
  const std::optional<GridInfo>& grid_info() const { return grid_; }
  const TriangleAudit& audit() const { return audit_; }
  bool has_coords() const { return metric_kind_ == MetricKind::euclidean; }
  int coord_dim() const { return coord_dim_; }
  const std::vector<double>& coords() const { return coords_; }
  const Eigen::MatrixXd& dense_metric() const { return *dense_; }

  std::span<const double> point_coords(int i) const {
    return {coords_.data() + static_cast<std::size_t>(i) * coord_dim_,
            static_cast<std::size_t>(coord_dim_)};
  }

  double distance(int i, int j) const {
    if (metric_kind_ == MetricKind::dense) return (*dense_)(i, j);
    const double* a = coords_.data() + static_cast<std::size_t>(i) * coord_dim_;
    const double* b = coords_.data() + static_cast<std::size_t>(j) * coord_dim_;
    double s = 0.0;
    for (int d = 0; d < coord_dim_; ++d) {
      const double diff = a[d] - b[d];
      s += diff * diff;
    }
    return std::sqrt(s);
  }

  // -- ball queries ----------------------------------------------------------

  BallIndex ball(int x, double r) const {
    if (!(r > 0.0)) throw std::invalid_argument("ball: radius must be positive");
    BallIndex b;
    b.center = x;
    b.radius = r;
    if (metric_kind_ == MetricKind::dense) {
      for (int y = 0; y < size(); ++y)
        if ((*dense_)(x, y) < r) b.members.push_back(y);
    } else {
      visit_bucket_candidates(x, r, [&](int y) {
        if (distance(x, y) < r) b.members.push_back(y);
      });
      std::sort(b.members.begin(), b.members.end());
    }
    double mass = 0.0;
    for (int y : b.members) mass += weight(y);
    b.mass = mass;
    return b;
  }

  /// True iff some exterior point lies at distance < r (strict) from x.
  bool exterior_strictly_within(int x, double r) const {
    return exterior_within(x, r, /*strict=*/true);
  }

  /// True iff some exterior point lies at distance <= r from x.
  bool exterior_within_closed(int x, double r) const {
    return exterior_within(x, r, /*strict=*/false);
  }

  /// Discrete "B_r(x) inside Omega": x interior, every ball member interior,
  /// and no exterior point closer than r. The last clause subsumes the
  /// member check for exact balls; both are evaluated as specified.
  bool ball_inside_interior(int x, double r) const {
    if (!(r > 0.0)) throw std::invalid_argument("ball_inside_interior: r must be positive");
    if (!is_interior(x)) return false;
    if (exterior_strictly_within(x, r)) return false;
    for (int y : ball(x, r).members)
      if (!is_interior(y)) return false;
    return true;
  }

  /// Interior points farther than `margin` from every exterior point.
  std::vector<int> bulk_points(double margin) const {
    std::vector<int> out;
    for (int x : interior_ids_)
      if (!exterior_within_closed(x, margin)) out.push_back(x);
    return out;
  }

  // -- builders --------------------------------------------------------------

  /// Uniform grid on `box` inflated by `collar`. Spacing per axis is
  /// (hi-lo)/(n_per_side-1); weights are the cell volume; labels follow
  /// closed-box membership. Collar points extend floor(collar/h) steps.
  static PointCloudSpace build_grid_domain(int dimension, int n_per_side,
                                           const std::vector<std::array<double, 2>>& box,
                                           double collar) {
    if (dimension < 1 || dimension > 3)
      throw std::invalid_argument("build_grid_domain: dimension must be 1..3");
    if (n_per_side < 2) throw std::invalid_argument("build_grid_domain: n_per_side >= 2");
    if (!(collar > 0.0)) throw std::invalid_argument("build_grid_domain: collar > 0");
    if (static_cast<int>(box.size()) != dimension)
      throw std::invalid_argument("build_grid_domain: box/dimension mismatch");

    GridInfo grid;
    grid.dim = dimension;
    double cell_volume = 1.0;
    std::array<int, 3> ncollar{0, 0, 0};
    for (int a = 0; a < dimension; ++a) {
      const double lo = box[a][0], hi = box[a][1];
      if (!(hi - lo > 0.0)) throw std::invalid_argument("build_grid_domain: zero-volume box");
      const double h = (hi - lo) / (n_per_side - 1);
      ncollar[a] = static_cast<int>(std::floor(collar / h + 1e-9));
      grid.spacing[a] = h;
      grid.origin[a] = lo - ncollar[a] * h;
      grid.npts[a] = n_per_side + 2 * ncollar[a];
      cell_volume *= h;
    }

    int total = 1;
    for (int a = 0; a < dimension; ++a) total *= grid.npts[a];

    std::vector<double> coords(static_cast<std::size_t>(total) * dimension);
    std::vector<uint8_t> interior(total, 0);
    std::array<int, 3> idx{0, 0, 0};
    for (int id = 0; id < total; ++id) {
      bool inside = true;
      for (int a = 0; a < dimension; ++a) {
        const double c = grid.origin[a] + idx[a] * grid.spacing[a];
        coords[static_cast<std::size_t>(id) * dimension + a] = c;
        const double tol = 1e-9 * grid.spacing[a];
        if (c < box[a][0] - tol || c > box[a][1] + tol) inside = false;
      }
      interior[id] = inside ? 1 : 0;
      // advance multi-index, axis (dim-1) fastest
      for (int a = dimension - 1; a >= 0; --a) {
        if (++idx[a] < grid.npts[a]) break;
        idx[a] = 0;
      }
    }
    return from_coords(dimension, std::move(coords),
                       std::vector<double>(total, cell_volume), std::move(interior), grid);
  }

  /// All-pairs shortest-path metric of a positively weighted connected graph.
  static PointCloudSpace build_graph_domain(
      const std::vector<std::tuple<int, int, double>>& edges,
      const std::vector<int>& interior_ids, std::vector<double> weights) {
    const int n = static_cast<int>(weights.size());
    if (n < 2) throw std::invalid_argument("build_graph_domain: need >= 2 points");
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (const auto& [i, j, len] : edges) {
      if (i < 0 || i >= n || j < 0 || j >= n)
        throw std::invalid_argument("build_graph_domain: edge endpoint out of range");
      if (!(len > 0.0)) throw std::invalid_argument("build_graph_domain: edge length > 0");
      adj[i].emplace_back(j, len);
      adj[j].emplace_back(i, len);
    }
    const double inf = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd metric(n, n);
    std::vector<double> dist(n);
    for (int src = 0; src < n; ++src) {
      std::fill(dist.begin(), dist.end(), inf);
      dist[src] = 0.0;
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      pq.emplace(0.0, src);
      while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        for (auto [v, len] : adj[u]) {
          if (dist[u] + len < dist[v]) {
            dist[v] = dist[u] + len;
            pq.emplace(dist[v], v);
          }
        }
      }
      for (int v = 0; v < n; ++v) {
        if (dist[v] == inf)
          throw std::invalid_argument("build_graph_domain: graph is disconnected");
        metric(src, v) = dist[v];
      }
    }
    metric = 0.5 * (metric + metric.transpose()).eval();  // symmetrize rounding
    std::vector<uint8_t> interior(n, 0);
    for (int id : interior_ids) {
      if (id < 0 || id >= n)
        throw std::invalid_argument("build_graph_domain: interior id out of range");
      interior[id] = 1;
    }
    return from_dense(std::move(metric), std::move(weights), std::move(interior));
  }

 private:
  void finalize() {
    const auto n = weights_.size();
    if (n == 0) throw std::invalid_argument("domain: empty point set");
    if (interior_.size() != n) throw std::invalid_argument("domain: label size mismatch");
    for (double w : weights_)
      if (!(w > 0.0)) throw std::invalid_argument("domain: weights must be positive");
    if (metric_kind_ == MetricKind::euclidean) {
      if (coords_.size() != n * static_cast<std::size_t>(coord_dim_))
        throw std::invalid_argument("domain: coordinate size mismatch");
    } else {
      if (dense_->rows() != static_cast<Eigen::Index>(n) || dense_->cols() != dense_->rows())
        throw std::invalid_argument("domain: dense metric shape mismatch");
    }
    for (int i = 0; i < size(); ++i)
      (is_interior(i) ? interior_ids_ : exterior_ids_).push_back(i);
    if (exterior_ids_.empty())
      throw std::invalid_argument("domain: exterior set must be nonempty");
    if (metric_kind_ == MetricKind::euclidean) build_buckets();
    run_triangle_audit();
  }

  void run_triangle_audit() {
    constexpr int kTriples = 10000;
    Rng rng(0x5EED5EEDULL);
    audit_.samples = kTriples;
    const auto n = static_cast<std::uint64_t>(size());
    for (int t = 0; t < kTriples; ++t) {
      const int i = static_cast<int>(rng.integer(n));
      const int j = static_cast<int>(rng.integer(n));
      const int k = static_cast<int>(rng.integer(n));
      const double dij = distance(i, j);
      const double excess = dij - (distance(i, k) + distance(k, j));
      if (excess > 1e-12 * std::max(1.0, dij)) {
        ++audit_.violations;
        audit_.worst_excess = std::max(audit_.worst_excess, excess);
      }
      if (distance(i, i) != 0.0 || std::abs(dij - distance(j, i)) > 1e-12 * std::max(1.0, dij))
        ++audit_.violations;
    }
    if (audit_.violations > 0)
      throw std::invalid_argument("domain: metric failed the triangle-inequality audit");
  }

  // Uniform-bin spatial index over the coordinate bounding box.
  void build_buckets() {
    bbox_lo_.assign(coord_dim_, std::numeric_limits<double>::infinity());
    bbox_hi_.assign(coord_dim_, -std::numeric_limits<double>::infinity());
    for (int i = 0; i < size(); ++i) {
      auto p = point_coords(i);
      for (int d = 0; d < coord_dim_; ++d) {
        bbox_lo_[d] = std::min(bbox_lo_[d], p[d]);
        bbox_hi_[d] = std::max(bbox_hi_[d], p[d]);
      }
    }
    double max_extent = 0.0;
    for (int d = 0; d < coord_dim_; ++d)
      max_extent = std::max(max_extent, bbox_hi_[d] - bbox_lo_[d]);
    const double per_axis =
        std::max(1.0, std::floor(std::pow(static_cast<double>(size()), 1.0 / coord_dim_)));
    cell_ = max_extent > 0.0 ? max_extent / per_axis : 1.0;
    nbuckets_.assign(coord_dim_, 1);
    int total = 1;
    for (int d = 0; d < coord_dim_; ++d) {
      nbuckets_[d] =
          std::max(1, static_cast<int>(std::floor((bbox_hi_[d] - bbox_lo_[d]) / cell_)) + 1);
      total *= nbuckets_[d];
    }
    bucket_of_.resize(size());
    std::vector<int> counts(total, 0);
    for (int i = 0; i < size(); ++i) {
      const int b = bucket_index(point_coords(i));
      bucket_of_[i] = b;
      ++counts[b];
    }
    bucket_start_.assign(total + 1, 0);
    for (int b = 0; b < total; ++b) bucket_start_[b + 1] = bucket_start_[b] + counts[b];
    bucket_items_.resize(size());
    std::vector<int> cursor(bucket_start_.begin(), bucket_start_.end() - 1);
    for (int i = 0; i < size(); ++i) bucket_items_[cursor[bucket_of_[i]]++] = i;
  }

  int bucket_coord(double x, int d) const {
    int c = static_cast<int>(std::floor((x - bbox_lo_[d]) / cell_));
    return std::clamp(c, 0, nbuckets_[d] - 1);
  }

  int bucket_index(std::span<const double> p) const {
    int b = 0;
    for (int d = 0; d < coord_dim_; ++d) b = b * nbuckets_[d] + bucket_coord(p[d], d);
    return b;
  }

  template <typename Fn>
  void visit_bucket_candidates(int x, double r, Fn&& fn) const {
    auto p = point_coords(x);
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0}, it{0, 0, 0};
    for (int d = 0; d < coord_dim_; ++d) {
      lo[d] = bucket_coord(p[d] - r, d);
      hi[d] = bucket_coord(p[d] + r, d);
      it[d] = lo[d];
    }
    for (int d = coord_dim_; d < 3; ++d) lo[d] = hi[d] = it[d] = 0;
    while (true) {
      int b = 0;
      for (int d = 0; d < coord_dim_; ++d) b = b * nbuckets_[d] + it[d];
      for (int k = bucket_start_[b]; k < bucket_start_[b + 1]; ++k) fn(bucket_items_[k]);
      int d = coord_dim_ - 1;
      while (d >= 0) {
        if (++it[d] <= hi[d]) break;
        it[d] = lo[d];
        --d;
      }
      if (d < 0) break;
    }
  }

  bool exterior_within(int x, double r, bool strict) const {
    if (metric_kind_ == MetricKind::dense) {
      for (int e : exterior_ids_) {
        const double d = distance(x, e);
        if (strict ? d < r : d <= r) return true;
      }
      return false;
    }
    bool found = false;
    visit_bucket_candidates(x, r, [&](int y) {
      if (found || is_interior(y)) return;
      const double d = distance(x, y);
      if (strict ? d < r : d <= r) found = true;
    });
    return found;
  }

  MetricKind metric_kind_ = MetricKind::euclidean;
  int coord_dim_ = 0;
  std::vector<double> coords_;
  std::optional<Eigen::MatrixXd> dense_;
  std::vector<double> weights_;
  std::vector<uint8_t> interior_;
  std::vector<int> interior_ids_, exterior_ids_;
  std::optional<GridInfo> grid_;
  TriangleAudit audit_;

  // bucket index (euclidean only)
  std::vector<double> bbox_lo_, bbox_hi_;
  double cell_ = 1.0;
  std::vector<int> nbuckets_;
  std::vector<int> bucket_of_, bucket_start_, bucket_items_;
};

using DomainPtr = std::shared_ptr<const PointCloudSpace>;

}  // namespace ksh
