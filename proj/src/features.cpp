#include "fairboard/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fairboard/error.hpp"
#include "fairboard/stats.hpp"

namespace fairboard::repr {

SparseImage lesion_channels(const CompartmentMasks& masks) {
  SparseImage img;
  const std::array<Compartment, 3> channels{Compartment::NET, Compartment::ET, Compartment::OED};
  std::size_t offset = 0;
  for (auto c : channels) {
    const Volume v = resample_mask(masks[static_cast<std::size_t>(c)], {kMaskGrid, kMaskGrid, kMaskGrid}).volume;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v.data[i] != 0.0) {
        img.index.push_back(offset + i);
        img.value.push_back(v.data[i]);
      }
    offset += v.size();
  }
  return img;
}

namespace {

double sparse_dot(const SparseImage& a, const SparseImage& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.index.size() && j < b.index.size()) {
    if (a.index[i] < b.index[j]) {
      ++i;
    } else if (b.index[j] < a.index[i]) {
      ++j;
    } else {
      s += a.value[i++] * b.value[j++];
    }
  }
  return s;
}

}  // namespace

LesionPca lesion_pca(const std::vector<SparseImage>& images, std::size_t dimension, bool keep_loadings, double target,
                     int cap) {
  const auto n = static_cast<Eigen::Index>(images.size());
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "PCA needs at least two images");
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b)
      gram(a, b) = gram(b, a) = sparse_dot(images[static_cast<std::size_t>(a)], images[static_cast<std::size_t>(b)]);
  const Eigen::VectorXd row_mean = gram.rowwise().mean();
  const double grand = row_mean.mean();
  Eigen::MatrixXd centred = gram;
  centred.colwise() -= row_mean;
  centred.rowwise() -= row_mean.transpose();
  centred.array() += grand;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centred);
  const Eigen::VectorXd lambda = eig.eigenvalues().reverse();
  const Eigen::MatrixXd u = eig.eigenvectors().rowwise().reverse();
  const double total = std::max(centred.trace(), 0.0);

  LesionPca pca;
  pca.mean = Eigen::VectorXd::Zero(0);
  if (!(total > 0.0)) {
    pca.scores.resize(n, 0);
    return pca;
  }
  const double tiny = 1e-12 * lambda(0);
  for (Eigen::Index i = 0; i < n; ++i)
    if (lambda(i) > tiny) pca.spectrum.push_back(lambda(i) / total);

  const int available = static_cast<int>(pca.spectrum.size());
  int k = 0;
  double cum = 0.0;
  while (k < std::min(cap, available) && cum < target) cum += pca.spectrum[static_cast<std::size_t>(k++)];
  pca.k = k;
  pca.cumulative = cum;
  pca.explained.assign(pca.spectrum.begin(), pca.spectrum.begin() + k);

  pca.scores.resize(n, k);
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd col = u.col(c) * std::sqrt(lambda(c));
    // Deterministic sign: the largest-magnitude score is positive.
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0) col = -col;
    pca.scores.col(c) = col;
  }

  if (keep_loadings) {
    pca.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension));
    for (const auto& img : images)
      for (std::size_t e = 0; e < img.index.size(); ++e) pca.mean(static_cast<Eigen::Index>(img.index[e])) += img.value[e];
    pca.mean /= static_cast<double>(n);
    // loading_c = Xc' s_c / lambda_c, with Xc' s = X' s because scores sum to zero.
    pca.loadings = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dimension), k);
    for (Eigen::Index a = 0; a < n; ++a) {
      const auto& img = images[static_cast<std::size_t>(a)];
      for (std::size_t e = 0; e < img.index.size(); ++e)
        for (int c = 0; c < k; ++c)
          pca.loadings(static_cast<Eigen::Index>(img.index[e]), c) += img.value[e] * pca.scores(a, c) / lambda(c);
    }
  }
  return pca;
}

const std::vector<std::string>& feature_deny_list() {
  static const std::vector<std::string> deny{"dice", "sensitivity", "precision", "hd95", "nsd",
                                              "asd",  "vol_sim",     "perf",      "score", "rank"};
  return deny;
}

void audit_feature_names(const std::vector<std::string>& names) {
  for (const auto& n : names) {
    std::string lower(n);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const auto& d : feature_deny_list())
      if (lower.find(d) != std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "performance-derived feature '" + n + "' in the embedding input");
  }
}

namespace {

struct OneHot {
  std::string name;
  std::vector<std::string> levels;
  std::optional<std::string> (*level)(const CohortRow&);
};

std::optional<std::string> opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

const std::vector<OneHot>& one_hot_terms() {
  static const std::vector<OneHot> terms{
      {"Sex", {"F", "M"}, [](const CohortRow& r) { return opt(r.sex); }},
      {"Grade",
       {"2", "3", "4"},
       [](const CohortRow& r) -> std::optional<std::string> {
         if (!r.who_grade) return std::nullopt;
         return std::to_string(*r.who_grade);
       }},
      {"Resection", {"GTR", "STR", "Biopsy"}, [](const CohortRow& r) { return opt(r.resection); }},
      {"Diagnosis", {"GBM", "Non-GBM"}, [](const CohortRow& r) { return diagnosis_class(r); }},
      {"Source", {"UCSF-PDGM", "UPENN-GBM"}, [](const CohortRow& r) { return opt(r.source); }},
      {"IDH", {"mutant", "wildtype"}, [](const CohortRow& r) { return opt(r.idh); }},
  };
  return terms;
}

}  // namespace

FeatureMatrix build_feature_matrix(const std::vector<std::string>& patient_ids, const std::vector<SparseImage>& images,
                                   std::size_t dimension, const std::vector<CohortRow>& cohort) {
  if (patient_ids.size() != images.size()) throw Error(ErrorCode::InvalidArgument, "one image per patient required");
  FeatureMatrix fm;
  std::vector<const CohortRow*> rows;
  std::vector<SparseImage> kept;
  for (std::size_t i = 0; i < patient_ids.size(); ++i) {
    const CohortRow* row = find_patient(cohort, patient_ids[i]);
    bool complete = row && row->age_years && std::isfinite(*row->age_years);
    if (complete)
      for (const auto& t : one_hot_terms()) complete = complete && t.level(*row).has_value();
    if (!complete) {
      fm.excluded.push_back(patient_ids[i]);
      continue;
    }
    fm.patient_ids.push_back(patient_ids[i]);
    rows.push_back(row);
    kept.push_back(images[i]);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "fewer than two patients with complete covariates");

  fm.pca = lesion_pca(kept, dimension);
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
  std::vector<bool> demographic;
  for (int c = 0; c < fm.pca.k; ++c) {
    names.push_back("PC" + std::to_string(c + 1));
    cols.push_back(fm.pca.scores.col(c));
    demographic.push_back(false);
  }
  for (const auto& t : one_hot_terms()) {
    for (const auto& l : t.levels) {
      Eigen::VectorXd col(n);
      for (Eigen::Index r = 0; r < n; ++r) {
        const auto level = t.level(*rows[static_cast<std::size_t>(r)]);
        if (std::find(t.levels.begin(), t.levels.end(), *level) == t.levels.end())
          throw Error(ErrorCode::UnknownLevel, "level '" + *level + "' of " + t.name);
        col(r) = *level == l ? 1.0 : 0.0;
      }
      names.push_back(t.name + "[" + l + "]");
      cols.push_back(col);
      demographic.push_back(true);
    }
  }
  {
    Eigen::VectorXd age(n);
    for (Eigen::Index r = 0; r < n; ++r) age(r) = *rows[static_cast<std::size_t>(r)]->age_years;
    names.push_back("Age");
    cols.push_back(age);
    demographic.push_back(true);
  }

  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const double mu = cols[j].mean();
    if ((cols[j].array() - mu).abs().maxCoeff() <= 1e-12 * std::max(1.0, std::fabs(mu))) {
      fm.dropped_constant.push_back(names[j]);
      continue;
    }
    keep.push_back(j);
  }
  fm.values.resize(n, static_cast<Eigen::Index>(keep.size()));
  fm.raw.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto& col = cols[keep[k]];
    const double mu = col.mean();
    const double sd = std::sqrt((col.array() - mu).square().mean());
    fm.raw.col(static_cast<Eigen::Index>(k)) = col;
    fm.values.col(static_cast<Eigen::Index>(k)) = (col.array() - mu) / sd;
    fm.names.push_back(names[keep[k]]);
    fm.is_demographic.push_back(demographic[keep[k]]);
  }
  audit_feature_names(fm.names);
  return fm;
}

}  // namespace fairboard::repr
