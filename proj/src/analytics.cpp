#include "finnews/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "finnews/corpus.hpp"

namespace finnews {

std::vector<double> encode_sentiment(Sentiment s, EncodingScheme scheme) {
  if (scheme == EncodingScheme::ordinal) {
    switch (s) {
      case Sentiment::negative: return {-1.0};
      case Sentiment::neutral: return {0.0};
      case Sentiment::positive: return {1.0};
    }
  }
  std::vector<double> v(3, 0.0);
  v[static_cast<std::size_t>(s)] = 1.0;
  return v;
}

std::vector<FeatureVector> aggregate_features(const ReportStore& store, const std::string& entity,
                                              const std::vector<DateRange>& windows) {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!windows[i].start.ok() || !windows[i].end.ok() || windows[i].end < windows[i].start) {
      throw std::invalid_argument("aggregate_features: window " + std::to_string(i) + " is malformed");
    }
    if (i > 0 && !(windows[i - 1].end < windows[i].start)) {
      throw std::invalid_argument("aggregate_features: windows overlap or are out of order");
    }
  }
  std::vector<FeatureVector> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    FeatureVector fv;
    fv.entity = entity;
    fv.window = w;
    for (const auto& m : store.query_by_entity(entity, w)) {
      switch (m.entity.sentiment) {
        case Sentiment::negative: ++fv.n_negative; break;
        case Sentiment::neutral: ++fv.n_neutral; break;
        case Sentiment::positive: ++fv.n_positive; break;
      }
    }
    fv.ordinal_mean = (static_cast<double>(fv.n_positive) - static_cast<double>(fv.n_negative)) /
                      static_cast<double>(std::max<std::size_t>(1, fv.total()));
    out.push_back(std::move(fv));
  }
  return out;
}

std::string render_features_csv(const std::vector<FeatureVector>& features) {
  std::string out = "entity,window_start,window_end,n_negative,n_neutral,n_positive,ordinal_mean\n";
  for (const auto& f : features) {
    out += csv_escape(f.entity) + ',' + format_date(f.window.start) + ',' + format_date(f.window.end) + ',' +
           std::to_string(f.n_negative) + ',' + std::to_string(f.n_neutral) + ',' + std::to_string(f.n_positive) +
           ',' + format_double(f.ordinal_mean) + '\n';
  }
  return out;
}

std::size_t export_features_csv(const std::vector<FeatureVector>& features,
                                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << render_features_csv(features);
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return features.size();
}

BootstrapFit fit_bootstrap_regression(const Matrix& X, std::span<const double> y, const Matrix& held_out,
                                      const BootstrapOptions& options) {
  const std::size_t n = X.rows;
  const std::size_t p = X.cols;
  if (X.data.size() != n * p || held_out.data.size() != held_out.rows * held_out.cols) {
    throw std::invalid_argument("bootstrap: matrix storage does not match its shape");
  }
  if (y.size() != n) throw std::invalid_argument("bootstrap: rows(X) != len(y)");
  if (n < p + 2) throw std::invalid_argument("bootstrap: need at least features + 2 rows");
  if (options.draws < 100) throw std::invalid_argument("bootstrap: draws must be >= 100");
  if (held_out.cols != p) throw std::invalid_argument("bootstrap: held-out rows have the wrong width");

  const std::size_t k = p + (options.fit_intercept ? 1 : 0);
  Eigen::MatrixXd design(n, k);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t c = 0;
    if (options.fit_intercept) design(r, c++) = 1.0;
    for (std::size_t j = 0; j < p; ++j) design(r, c++) = X(r, j);
  }
  Eigen::MatrixXd targets(held_out.rows, k);
  for (std::size_t r = 0; r < held_out.rows; ++r) {
    std::size_t c = 0;
    if (options.fit_intercept) targets(r, c++) = 1.0;
    for (std::size_t j = 0; j < p; ++j) targets(r, c++) = held_out(r, j);
  }

  BootstrapFit fit;
  fit.predictions.resize(held_out.rows);
  for (auto& d : fit.predictions) d.samples.reserve(options.draws);
  fit.coefficients.reserve(options.draws);

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  Eigen::MatrixXd A(n, k);
  Eigen::VectorXd b(n);

  for (std::size_t draw = 0; draw < options.draws; ++draw) {
    std::size_t retries = 0;
    while (true) {
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t src = pick(rng);
        A.row(r) = design.row(src);
        b(r) = y[src];
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
      if (static_cast<std::size_t>(qr.rank()) == k) {
        const Eigen::VectorXd beta = qr.solve(b);
        fit.coefficients.emplace_back(beta.data(), beta.data() + beta.size());
        const Eigen::VectorXd pred = targets * beta;
        for (std::size_t r = 0; r < held_out.rows; ++r) fit.predictions[r].samples.push_back(pred(r));
        break;
      }
      ++fit.singular_resamples;
      if (++retries > options.max_singular_retries) {
        throw std::runtime_error("bootstrap: design stays singular after " +
                                 std::to_string(options.max_singular_retries) + " resamples");
      }
    }
  }
  return fit;
}

double var_quantile(const PredictiveDistribution& dist, double alpha) {
  if (dist.samples.empty()) throw std::invalid_argument("var_quantile: empty distribution");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("var_quantile: alpha must lie in (0, 1)");
  const std::size_t n = dist.samples.size();
  // alpha * n within a relative 1e-12 of an integer counts as that integer.
  const double t = alpha * static_cast<double>(n);
  auto rank = static_cast<std::size_t>(std::ceil(t * (1.0 - 1e-12)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::vector<double> s = dist.samples;
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(rank - 1), s.end());
  return s[rank - 1];
}

}  // namespace finnews
