#include "semgest/metrics/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "semgest/error.hpp"

namespace semgest::metrics {

namespace {

using Matrix = Eigen::MatrixXd;

constexpr int kFgdFormatVersion = 1;
constexpr double kEigenFloor = 1e-10;

std::size_t common_dim(const Rows& rows, const char* what) {
  if (rows.empty()) throw ValidationError(std::string(what) + ": empty set");
  const std::size_t d = rows.front().size();
  if (d == 0) throw ValidationError(std::string(what) + ": zero-length vectors");
  for (const auto& r : rows) {
    if (r.size() != d) throw ShapeError(std::string(what) + ": rows of different lengths");
    for (double v : r) {
      if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite value");
    }
  }
  return d;
}

Matrix to_matrix(const std::vector<double>& values, std::size_t d) {
  Matrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = values[i * d + j];
  }
  return m;
}

// Eigenvalues of a symmetric PSD matrix with round-off removed: values below
// the numerical rank tolerance d * eps * max|lambda| become zero, since their
// square roots would otherwise add up to visible noise on rank-deficient
// covariances. Negative values beyond -1e-10 * max(1, max|lambda|) are errors.
Eigen::VectorXd clamped_eigenvalues(const Eigen::VectorXd& values, const char* what) {
  const double largest = values.cwiseAbs().maxCoeff();
  const double rank_tol =
      static_cast<double>(values.size()) * std::numeric_limits<double>::epsilon() * largest;
  Eigen::VectorXd out = values;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) throw NumericError(std::string(what) + ": non-finite eigenvalue");
    if (out[i] < -kEigenFloor * std::max(1.0, largest)) {
      std::ostringstream msg;
      msg << what << ": eigenvalue " << out[i] << " is negative beyond round-off";
      throw NumericError(msg.str());
    }
    if (out[i] <= rank_tol) out[i] = 0.0;
  }
  return out;
}

Matrix symmetric_sqrt(const Matrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw NumericError(std::string(what) + ": eigendecomposition failed");
  }
  const Eigen::VectorXd roots = clamped_eigenvalues(solver.eigenvalues(), what).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace

double diversity(const Rows& latent_means) {
  const std::size_t n = latent_means.size();
  if (n < 2) throw ValidationError("diversity: need at least 2 latent vectors");
  const std::size_t d = common_dim(latent_means, "diversity");
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t k = 0; k < d; ++k) total += std::abs(latent_means[a][k] - latent_means[b][k]);
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>((n + 1) / 2));
}

Gaussian fit_gaussian(const Rows& features) {
  if (features.size() < 2) throw ValidationError("fit_gaussian: need at least 2 samples");
  const std::size_t d = common_dim(features, "fit_gaussian");
  const double n = static_cast<double>(features.size());
  Gaussian g{std::vector<double>(d, 0.0), std::vector<double>(d * d, 0.0)};
  for (const auto& r : features) {
    for (std::size_t i = 0; i < d; ++i) g.mean[i] += r[i] / n;
  }
  for (const auto& r : features) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        g.covariance[i * d + j] += (r[i] - g.mean[i]) * (r[j] - g.mean[j]) / (n - 1.0);
      }
    }
  }
  return g;
}

double frechet_distance(const Gaussian& a, const Gaussian& b) {
  const std::size_t d = a.dim();
  if (d == 0 || b.dim() != d || a.covariance.size() != d * d || b.covariance.size() != d * d) {
    throw ShapeError("frechet_distance: Gaussians of different dimension");
  }
  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) mean_term += (a.mean[i] - b.mean[i]) * (a.mean[i] - b.mean[i]);
  const Matrix sa = to_matrix(a.covariance, d);
  const Matrix sb = to_matrix(b.covariance, d);
  const Matrix root_a = symmetric_sqrt(sa, "fgd covariance of the first set");
  Matrix inner = root_a * sb * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(inner, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("fgd: eigendecomposition failed");
  const double cross = clamped_eigenvalues(solver.eigenvalues(), "fgd cross term").cwiseSqrt().sum();
  return mean_term + sa.trace() + sb.trace() - 2.0 * cross;
}

double fgd(const Rows& features_a, const Rows& features_b) {
  return frechet_distance(fit_gaussian(features_a), fit_gaussian(features_b));
}

std::vector<motion::Pose> pad_keyposes(const std::vector<motion::Pose>& poses,
                                       std::size_t length) {
  if (poses.empty()) throw ValidationError("pad_keyposes: no poses");
  if (poses.size() > length) {
    throw ValidationError("pad_keyposes: " + std::to_string(poses.size()) +
                          " poses exceed the padded length " + std::to_string(length));
  }
  std::vector<motion::Pose> out = poses;
  out.resize(length, poses.back());
  return out;
}

FgdFeatureModel train_fgd_model(const std::vector<motion::MotionClip>& clips, std::size_t epochs,
                                std::uint64_t seed) {
  if (clips.empty()) throw ValidationError("train_fgd_model: no clips");
  FgdFeatureModel model;
  std::vector<std::vector<motion::Pose>> data;
  for (const auto& clip : clips) {
    data.push_back(pad_keyposes(motion::extract_keyposes(clip).poses, model.padded_length));
  }
  const vae::VaeConfig config{.latent_dim = kFgdLatentDim,
                              .min_len = model.padded_length,
                              .max_len = model.padded_length};
  model.vae = vae::train_vae(data, config, {.epochs = epochs, .seed = seed}).model;
  return model;
}

Rows fgd_features(const FgdFeatureModel& model, const std::vector<motion::MotionClip>& clips) {
  Rows out;
  for (const auto& clip : clips) {
    out.push_back(
        vae::encode(model.vae, pad_keyposes(motion::extract_keyposes(clip).poses,
                                            model.padded_length))
            .mu);
  }
  return out;
}

double fgd(const FgdFeatureModel& model, const std::vector<motion::MotionClip>& a,
           const std::vector<motion::MotionClip>& b) {
  return fgd(fgd_features(model, a), fgd_features(model, b));
}

nlohmann::json fgd_model_to_json(const FgdFeatureModel& model) {
  return {{"format", "semgest-fgd"},
          {"version", kFgdFormatVersion},
          {"padded_length", model.padded_length},
          {"vae", vae::vae_to_json(model.vae)}};
}

FgdFeatureModel fgd_model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "semgest-fgd" || doc.at("version") != kFgdFormatVersion) {
      throw ValidationError("fgd model document: unexpected format or version");
    }
    FgdFeatureModel model{vae::vae_from_json(doc.at("vae")),
                          doc.at("padded_length").get<std::size_t>()};
    if (model.vae.config.max_len < model.padded_length ||
        model.vae.config.min_len > model.padded_length) {
      throw ValidationError("fgd model document: VAE cannot take the padded length");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("fgd model document: ") + e.what());
  }
}

double l1_metric(const motion::MotionClip& generated, const motion::MotionClip& reference) {
  generated.validate();
  reference.validate();
  const motion::MotionClip g = motion::resample(generated, reference.frames.size());
  double total = 0.0;
  for (std::size_t t = 0; t < reference.frames.size(); ++t) {
    for (std::size_t i = 0; i < motion::kPoseDim; ++i) {
      total += std::abs(g.frames[t].coords[i] - reference.frames[t].coords[i]);
    }
  }
  return total / static_cast<double>(reference.frames.size() * motion::kJointCount);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("pearson: inputs differ in length");
  if (x.size() < 3) throw ValidationError("pearson: need at least 3 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw ValidationError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw ValidationError("roc_auc: inputs differ in length");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? pos : neg).push_back(scores[i]);
  if (pos.empty() || neg.empty()) throw ValidationError("roc_auc: need both classes");
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double p : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

nlohmann::json report_json(const MetricReport& report) {
  nlohmann::json sets = nlohmann::json::array();
  for (const SetSummary& s : report.sets) {
    nlohmann::json j = {{"name", s.name}, {"clips", s.clips}, {"jerk", s.jerk}};
    j["diversity"] = s.diversity ? nlohmann::json(*s.diversity) : nlohmann::json(nullptr);
    sets.push_back(std::move(j));
  }
  nlohmann::json out = {{"sets", std::move(sets)}, {"correlations", report.correlations}};
  out["fgd"] = report.fgd ? nlohmann::json(*report.fgd) : nlohmann::json(nullptr);
  out["l1"] = report.l1 ? nlohmann::json(*report.l1) : nlohmann::json(nullptr);
  return out;
}

std::string report_table(const MetricReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  out << std::left << std::setw(24) << "set" << std::right << std::setw(8) << "clips"
      << std::setw(16) << "diversity" << std::setw(16) << "jerk" << '\n';
  for (const SetSummary& s : report.sets) {
    out << std::left << std::setw(24) << s.name << std::right << std::setw(8) << s.clips;
    if (s.diversity) {
      out << std::setw(16) << *s.diversity;
    } else {
      out << std::setw(16) << "-";
    }
    out << std::setw(16) << s.jerk << '\n';
  }
  if (report.fgd) out << std::left << std::setw(24) << "fgd" << *report.fgd << '\n';
  if (report.l1) out << std::left << std::setw(24) << "l1" << *report.l1 << '\n';
  for (const auto& [name, r] : report.correlations) {
    out << std::left << std::setw(24) << ("pearson(" + name + ")") << r << '\n';
  }
  return out.str();
}

}  // namespace semgest::metrics
