#include "fairboard/embedding.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fairboard/error.hpp"
#include "fairboard/rng.hpp"

namespace fairboard::repr {

CurveParams find_ab_params(double spread, double min_dist) {
  constexpr int kPoints = 300;
  std::vector<double> xs(kPoints), ys(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    xs[static_cast<std::size_t>(i)] = 3.0 * spread * i / (kPoints - 1);
    const double x = xs[static_cast<std::size_t>(i)];
    ys[static_cast<std::size_t>(i)] = x < min_dist ? 1.0 : std::exp(-(x - min_dist) / spread);
  }
  auto residuals = [&](double a, double b, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    for (int i = 0; i < kPoints; ++i) {
      const double x = xs[static_cast<std::size_t>(i)];
      const double p = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
      const double f = 1.0 / (1.0 + a * p);
      r(i) = f - ys[static_cast<std::size_t>(i)];
      if (jac) {
        (*jac)(i, 0) = -p * f * f;
        (*jac)(i, 1) = x > 0.0 ? -a * p * 2.0 * std::log(x) * f * f : 0.0;
      }
    }
  };

  // Levenberg-Marquardt from (1, 1).
  double a = 1.0, b = 1.0, lambda = 1e-3;
  Eigen::VectorXd r(kPoints), r_try(kPoints);
  Eigen::MatrixXd jac(kPoints, 2);
  residuals(a, b, r, &jac);
  double cost = r.squaredNorm();
  for (int it = 0; it < 200; ++it) {
    const Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d g = jac.transpose() * r;
    Eigen::Matrix2d damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal();
    const Eigen::Vector2d step = damped.ldlt().solve(-g);
    const double a_try = a + step(0), b_try = b + step(1);
    residuals(a_try, b_try, r_try, nullptr);
    const double cost_try = r_try.squaredNorm();
    if (std::isfinite(cost_try) && cost_try < cost) {
      const bool done = cost - cost_try <= 1e-15 * cost && step.norm() <= 1e-12 * (1.0 + std::hypot(a, b));
      a = a_try;
      b = b_try;
      residuals(a, b, r, &jac);
      cost = cost_try;
      lambda = std::max(lambda / 10.0, 1e-12);
      if (done) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return {a, b};
}

Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw Error(ErrorCode::TooFewPoints, "embedding needs at least two points");
  const Eigen::MatrixXd centred = x.rowwise() - x.colwise().mean();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinU);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), 2);
  const Eigen::Index k = std::min<Eigen::Index>(2, svd.singularValues().size());
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd col = svd.matrixU().col(c) * svd.singularValues()(c);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0) col = -col;
    out.col(c) = col;
  }
  return out;
}

namespace {

struct Knn {
  std::vector<std::vector<int>> index;
  std::vector<std::vector<double>> dist;
};

Knn cosine_knn(const Eigen::MatrixXd& x, int k) {
  const Eigen::Index n = x.rows();
  const Eigen::VectorXd norms = x.rowwise().norm();
  const Eigen::MatrixXd dot = x * x.transpose();
  Knn knn;
  knn.index.resize(static_cast<std::size_t>(n));
  knn.dist.resize(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::vector<double> d(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double v;
      if (norms(i) == 0.0 && norms(j) == 0.0)
        v = 0.0;
      else if (norms(i) == 0.0 || norms(j) == 0.0)
        v = 1.0;
      else
        v = std::max(0.0, 1.0 - dot(i, j) / (norms(i) * norms(j)));
      d[static_cast<std::size_t>(j)] = i == j ? 0.0 : v;
    }
    std::iota(order.begin(), order.end(), 0);
    // Self first, then by distance with index as tie-breaker.
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      if ((a == i) != (b == i)) return a == i;
      const double da = d[static_cast<std::size_t>(a)], db = d[static_cast<std::size_t>(b)];
      if (da != db) return da < db;
      return a < b;
    });
    for (int m = 0; m < k; ++m) {
      knn.index[static_cast<std::size_t>(i)].push_back(order[static_cast<std::size_t>(m)]);
      knn.dist[static_cast<std::size_t>(i)].push_back(d[static_cast<std::size_t>(order[static_cast<std::size_t>(m)])]);
    }
  }
  return knn;
}

// Per-point bandwidths so that the membership strengths sum to log2(k).
void smooth_knn_dist(const Knn& knn, int k, std::vector<double>& sigma, std::vector<double>& rho) {
  constexpr double kTolerance = 1e-5;
  constexpr double kMinScale = 1e-3;
  const double target = std::log2(static_cast<double>(k));
  const std::size_t n = knn.dist.size();
  sigma.assign(n, 0.0);
  rho.assign(n, 0.0);
  double global_mean = 0.0;
  for (const auto& row : knn.dist) global_mean += std::accumulate(row.begin(), row.end(), 0.0);
  global_mean /= static_cast<double>(n * static_cast<std::size_t>(k));

  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = knn.dist[i];
    for (double v : d)
      if (v > 0.0) {
        rho[i] = v;
        break;
      }
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
    for (int it = 0; it < 64; ++it) {
      double psum = 0.0;
      for (int j = 1; j < k; ++j) {
        const double gap = d[static_cast<std::size_t>(j)] - rho[i];
        psum += gap > 0.0 ? std::exp(-gap / mid) : 1.0;
      }
      if (std::fabs(psum - target) < kTolerance) break;
      if (psum > target) {
        hi = mid;
        mid = (lo + hi) / 2.0;
      } else {
        lo = mid;
        mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
      }
    }
    sigma[i] = mid;
    const double mean_i = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(k);
    if (rho[i] > 0.0)
      sigma[i] = std::max(sigma[i], kMinScale * mean_i);
    else
      sigma[i] = std::max(sigma[i], kMinScale * global_mean);
  }
}

Eigen::SparseMatrix<double> fuzzy_graph(const Knn& knn, int k) {
  std::vector<double> sigma, rho;
  smooth_knn_dist(knn, k, sigma, rho);
  const auto n = static_cast<Eigen::Index>(knn.index.size());
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index i = 0; i < n; ++i)
    for (int m = 0; m < k; ++m) {
      const int j = knn.index[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
      if (j == i) continue;
      const double gap = knn.dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)] - rho[static_cast<std::size_t>(i)];
      const double w = gap <= 0.0 || sigma[static_cast<std::size_t>(i)] == 0.0 ? 1.0 : std::exp(-gap / sigma[static_cast<std::size_t>(i)]);
      trip.emplace_back(i, j, w);
    }
  Eigen::SparseMatrix<double> w(n, n);
  w.setFromTriplets(trip.begin(), trip.end());
  const Eigen::SparseMatrix<double> wt = w.transpose();
  Eigen::SparseMatrix<double> g = w + wt - Eigen::SparseMatrix<double>(w.cwiseProduct(wt));
  g.prune(0.0);
  return g;
}

int connected_components(const Eigen::SparseMatrix<double>& g) {
  const auto n = g.rows();
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int count = 0;
  std::vector<Eigen::Index> stack;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    label[static_cast<std::size_t>(s)] = count;
    stack.push_back(s);
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (Eigen::SparseMatrix<double>::InnerIterator it(g, v); it; ++it)
        if (label[static_cast<std::size_t>(it.row())] < 0) {
          label[static_cast<std::size_t>(it.row())] = count;
          stack.push_back(it.row());
        }
    }
    ++count;
  }
  return count;
}

// Second and third eigenvectors of the symmetric normalized Laplacian.
Eigen::MatrixXd spectral_layout(const Eigen::SparseMatrix<double>& g) {
  const auto n = g.rows();
  const Eigen::MatrixXd a = Eigen::MatrixXd(g);
  const Eigen::VectorXd deg = a.rowwise().sum();
  const Eigen::VectorXd dinv = deg.array().rsqrt();
  const Eigen::MatrixXd lap =
      Eigen::MatrixXd::Identity(n, n) - dinv.asDiagonal() * a * dinv.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  Eigen::MatrixXd out = eig.eigenvectors().middleCols(1, 2);
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    out.col(c).cwiseAbs().maxCoeff(&arg);
    if (out(arg, c) < 0) out.col(c) = -out.col(c);
  }
  return out;
}

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace

Eigen::MatrixXd embed_2d(const Eigen::MatrixXd& x, const EmbedParams& params) {
  if (params.method == EmbedMethod::Pca) return pca_2d(x);
  if (params.metric != "cosine") throw Error(ErrorCode::InvalidArgument, "unsupported metric '" + params.metric + "'");
  const auto n = x.rows();
  const int k = params.n_neighbors;
  if (k < 2 || n <= k) throw Error(ErrorCode::TooFewPoints, "embedding needs more points than n_neighbors");

  const Knn knn = cosine_knn(x, k);
  Eigen::SparseMatrix<double> graph = fuzzy_graph(knn, k);
  const int n_epochs = params.n_epochs > 0 ? params.n_epochs : (n <= 10000 ? 500 : 200);

  double wmax = 0.0;
  for (Eigen::Index c = 0; c < graph.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph, c); it; ++it) wmax = std::max(wmax, it.value());
  graph.prune([&](Eigen::Index, Eigen::Index, double v) { return v >= wmax / n_epochs; });

  Rng rng(params.seed);
  // Spectral start on a connected graph; otherwise the two leading principal
  // axes of the input give the initial layout.
  Eigen::MatrixXd emb = connected_components(graph) == 1 ? spectral_layout(graph) : pca_2d(x);
  const double scale = emb.cwiseAbs().maxCoeff();
  emb *= scale > 0.0 ? 10.0 / scale : 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < 2; ++c) emb(i, c) += rng.normal(0.0, 1e-4);
  for (Eigen::Index c = 0; c < 2; ++c) {
    const double lo = emb.col(c).minCoeff(), hi = emb.col(c).maxCoeff();
    if (hi > lo)
      emb.col(c) = ((emb.col(c).array() - lo) * (10.0 / (hi - lo))).matrix();
    else
      emb.col(c).setZero();
  }

  std::vector<int> head, tail;
  std::vector<double> weight;
  for (Eigen::Index c = 0; c < graph.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph, c); it; ++it) {
      head.push_back(static_cast<int>(it.row()));
      tail.push_back(static_cast<int>(it.col()));
      weight.push_back(it.value());
    }
  const std::size_t n_edges = weight.size();
  std::vector<double> eps(n_edges), eps_neg(n_edges), next(n_edges), next_neg(n_edges);
  for (std::size_t e = 0; e < n_edges; ++e) {
    eps[e] = wmax / weight[e];
    eps_neg[e] = eps[e] / params.negative_sample_rate;
    next[e] = eps[e];
    next_neg[e] = eps_neg[e];
  }

  const CurveParams ab = find_ab_params(params.spread, params.min_dist);
  const double a = ab.a, b = ab.b;
  for (int epoch = 0; epoch < n_epochs; ++epoch) {
    const double alpha = params.learning_rate * (1.0 - static_cast<double>(epoch) / n_epochs);
    for (std::size_t e = 0; e < n_edges; ++e) {
      if (next[e] > epoch) continue;
      const int j = head[e], t = tail[e];
      double dx = emb(j, 0) - emb(t, 0), dy = emb(j, 1) - emb(t, 1);
      double d2 = dx * dx + dy * dy;
      if (d2 > 0.0) {
        const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
        const double gx = clip(coeff * dx) * alpha, gy = clip(coeff * dy) * alpha;
        emb(j, 0) += gx;
        emb(j, 1) += gy;
        emb(t, 0) -= gx;
        emb(t, 1) -= gy;
      }
      next[e] += eps[e];

      const int n_neg = static_cast<int>((epoch - next_neg[e]) / eps_neg[e]);
      for (int p = 0; p < n_neg; ++p) {
        const auto other = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        dx = emb(j, 0) - emb(other, 0);
        dy = emb(j, 1) - emb(other, 1);
        d2 = dx * dx + dy * dy;
        if (d2 <= 0.0) continue;
        const double coeff = 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0));
        emb(j, 0) += clip(coeff * dx) * alpha;
        emb(j, 1) += clip(coeff * dy) * alpha;
      }
      next_neg[e] += n_neg * eps_neg[e];
    }
  }
  return emb;
}

}  // namespace fairboard::repr
