#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "finnews/report.hpp"
#include "finnews/store.hpp"

namespace finnews {

enum class EncodingScheme { ordinal, one_hot };

// ordinal: negative -1, neutral 0, positive +1.
// one_hot: (negative, neutral, positive) indicator.
std::vector<double> encode_sentiment(Sentiment s, EncodingScheme scheme);

struct FeatureVector {
  std::string entity;
  DateRange window;
  std::size_t n_negative = 0;
  std::size_t n_neutral = 0;
  std::size_t n_positive = 0;
  double ordinal_mean = 0.0;

  std::size_t total() const { return n_negative + n_neutral + n_positive; }
};

// Windows must each be well-formed, ordered and non-overlapping.
std::vector<FeatureVector> aggregate_features(const ReportStore& store, const std::string& entity,
                                              const std::vector<DateRange>& windows);

// Header: entity,window_start,window_end,n_negative,n_neutral,n_positive,ordinal_mean
std::size_t export_features_csv(const std::vector<FeatureVector>& features,
                                const std::filesystem::path& path);
std::string render_features_csv(const std::vector<FeatureVector>& features);

struct PredictiveDistribution {
  std::vector<double> samples;
};

// Row-major design matrix without an intercept column.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

struct BootstrapOptions {
  std::size_t draws = 1000;
  std::uint64_t seed = 0;
  bool fit_intercept = true;
  // Resamples allowed per draw when the resampled design is rank deficient.
  std::size_t max_singular_retries = 100;
};

struct BootstrapFit {
  // One distribution per held-out row, each with exactly `draws` samples.
  std::vector<PredictiveDistribution> predictions;
  // Per draw: intercept (when fitted) followed by one slope per feature.
  std::vector<std::vector<double>> coefficients;
  std::size_t singular_resamples = 0;
};

// Each draw refits OLS on a with-replacement resample of (X, y) and predicts
// the held-out rows. Deterministic for a given seed.
BootstrapFit fit_bootstrap_regression(const Matrix& X, std::span<const double> y, const Matrix& held_out,
                                      const BootstrapOptions& options = {});

inline constexpr double kDefaultVarAlpha = 0.05;

// Lower empirical quantile: the ceil(alpha * N)-th order statistic.
double var_quantile(const PredictiveDistribution& dist, double alpha = kDefaultVarAlpha);

}  // namespace finnews
