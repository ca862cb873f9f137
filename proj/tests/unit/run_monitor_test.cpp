#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "finnews/run_monitor.hpp"
#include "support.hpp"

using namespace finnews;
using finnews::testing::TempDir;

namespace {

std::vector<LossCurvePoint> curve(const std::vector<double>& train, const std::vector<double>& eval) {
  std::vector<LossCurvePoint> out;
  for (std::size_t i = 0; i < train.size(); ++i) out.push_back({static_cast<int>(i + 1), train[i], eval[i]});
  return out;
}

// Scans every window ending at e for the overfit condition.
std::optional<int> brute_force_overfit(const std::vector<LossCurvePoint>& pts, int patience) {
  for (std::size_t e = static_cast<std::size_t>(patience); e < pts.size(); ++e) {
    bool all = true;
    for (std::size_t k = e + 1 - patience; k <= e; ++k) {
      all = all && *pts[k].eval_loss > *pts[k - 1].eval_loss && pts[k].train_loss <= pts[k - 1].train_loss;
    }
    if (all) return pts[e].epoch;
  }
  return std::nullopt;
}

}  // namespace

TEST(ParseLossLog, SingleRow) {
  const auto run = parse_loss_log_text("epoch,loss,eval_loss\n1,1.20,1.30");
  ASSERT_EQ(run.points.size(), 1u);
  EXPECT_EQ(run.points[0], (LossCurvePoint{1, 1.20, 1.30}));
}

TEST(ParseLossLog, TenRowsFromFile) {
  TempDir dir;
  std::string text = "epoch,loss,eval_loss\r\n";
  for (int e = 1; e <= 10; ++e) text += std::to_string(e) + "," + std::to_string(2.0 / e) + ",\r\n";
  finnews::testing::write_file(dir / "run-4bit.csv", text);
  const auto run = parse_loss_log(dir / "run-4bit.csv");
  EXPECT_EQ(run.run_id, "run-4bit");
  ASSERT_EQ(run.points.size(), 10u);
  for (int e = 1; e <= 10; ++e) {
    EXPECT_EQ(run.points[e - 1].epoch, e);
    EXPECT_FALSE(run.points[e - 1].eval_loss);
  }
}

TEST(ParseLossLog, Errors) {
  EXPECT_THROW(parse_loss_log_text("epoch,loss,eval_loss\n1,1,1\n3,1,1\n2,1,1\n"), LossLogError);
  EXPECT_THROW(parse_loss_log_text("epoch,loss\n1,1\n"), LossLogError);
  EXPECT_THROW(parse_loss_log_text(""), LossLogError);
  EXPECT_THROW(parse_loss_log_text("epoch,loss,eval_loss\n1,abc,1\n"), LossLogError);
  EXPECT_THROW(parse_loss_log_text("epoch,loss,eval_loss\n1,nan,1\n"), LossLogError);
  EXPECT_THROW(parse_loss_log_text("epoch,loss,eval_loss\n0,1,1\n"), LossLogError);
  EXPECT_THROW(parse_loss_log_text("epoch,loss,eval_loss\n1,1\n"), LossLogError);
  try {
    parse_loss_log_text("epoch,loss,eval_loss\n1,1,1\n1,1,1\n");
    FAIL();
  } catch (const LossLogError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_TRUE(parse_loss_log_text("epoch,loss,eval_loss\n").points.empty());
}

TEST(DetectOverfit, MonotoneDecreasingEval) {
  const auto pts = curve({1.0, 0.8, 0.6, 0.4}, {1.1, 0.9, 0.7, 0.5});
  EXPECT_FALSE(detect_overfit(pts, 2));
}

TEST(DetectOverfit, EvalRisesFromEpochSix) {
  std::vector<double> train, eval;
  for (int e = 1; e <= 10; ++e) train.push_back(1.0 - 0.1 * (e - 1));
  eval = {1.0, 0.9, 0.8, 0.7, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85};
  const auto pts = curve(train, eval);
  EXPECT_EQ(detect_overfit(pts, 2), 7);
  EXPECT_EQ(brute_force_overfit(pts, 2), 7);
  EXPECT_EQ(detect_overfit(pts, 1), 6);
}

TEST(DetectOverfit, BothRisingIsNotOverfit) {
  const auto pts = curve({1.0, 0.9, 1.0, 1.1, 1.2}, {1.0, 0.9, 1.0, 1.1, 1.2});
  EXPECT_FALSE(detect_overfit(pts, 2));
}

TEST(DetectOverfit, PreconditionsAndSkippedPoints) {
  auto pts = curve({1.0, 0.9}, {1.0, 1.1});
  EXPECT_THROW(detect_overfit(pts, 2), std::invalid_argument);
  EXPECT_THROW(detect_overfit(pts, 0), std::invalid_argument);
  pts = curve({1.0, 0.9, 0.8, 0.7}, {1.0, 1.1, 1.2, 1.3});
  pts[1].eval_loss.reset();
  EXPECT_EQ(detect_overfit(pts, 2), 4);
}

TEST(DetectOverfit, MatchesBruteForceAndScaleInvariant) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::uniform_int_distribution<int> len(4, 15), pat(1, 3);
  for (int t = 0; t < 2000; ++t) {
    const int n = len(rng);
    std::vector<double> train, eval;
    for (int i = 0; i < n; ++i) {
      train.push_back(u(rng));
      eval.push_back(u(rng));
    }
    const auto pts = curve(train, eval);
    const int p = pat(rng);
    const auto got = detect_overfit(pts, p);
    ASSERT_EQ(got, brute_force_overfit(pts, p));
    auto scaled = pts;
    for (auto& q : scaled) {
      q.train_loss *= 3.7;
      *q.eval_loss *= 3.7;
    }
    ASSERT_EQ(detect_overfit(scaled, p), got);
  }
}

TEST(CompareRuns, IdenticalRunsHaveZeroDivergence) {
  RunRecord a{"a", Quantization::four_bit, curve({1, 0.5}, {1.2, 0.7}), std::nullopt};
  const auto d = compare_runs(a, a);
  EXPECT_EQ(d.max_train, 0.0);
  EXPECT_EQ(d.mean_train, 0.0);
  EXPECT_EQ(d.max_eval, 0.0);
  EXPECT_EQ(d.mean_eval, 0.0);
}

TEST(CompareRuns, ConstantEvalShift) {
  RunRecord a{"a", std::nullopt, curve({1, 0.5, 0.25}, {1.25, 0.75, 0.5}), std::nullopt};
  RunRecord b = a;
  for (auto& p : b.points) *p.eval_loss += 0.1;
  const auto d = compare_runs(a, b);
  EXPECT_NEAR(*d.mean_eval, 0.1, 1e-12);
  EXPECT_NEAR(*d.max_eval, 0.1, 1e-12);
  EXPECT_EQ(d.max_train, 0.0);
}

TEST(CompareRuns, SymmetricAndMatchesRecomputation) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0, 3);
  for (int t = 0; t < 200; ++t) {
    auto a = finnews::testing::random_run(rng, "a");
    auto b = a;
    for (auto& p : b.points) {
      p.train_loss = u(rng);
      if (p.eval_loss) p.eval_loss = u(rng);
    }
    const auto ab = compare_runs(a, b);
    const auto ba = compare_runs(b, a);
    double mx = 0, sum = 0;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      const double diff = std::abs(a.points[i].train_loss - b.points[i].train_loss);
      mx = std::max(mx, diff);
      sum += diff;
      ASSERT_EQ(ab.per_epoch[i].train, ba.per_epoch[i].train);
      ASSERT_EQ(ab.per_epoch[i].eval, ba.per_epoch[i].eval);
    }
    ASSERT_EQ(ab.max_train, mx);
    ASSERT_NEAR(ab.mean_train, sum / a.points.size(), 1e-12);
  }
}

TEST(CompareRuns, MismatchedEpochs) {
  RunRecord a{"a", std::nullopt, curve({1, 0.5}, {1, 1}), std::nullopt};
  RunRecord b{"b", std::nullopt, curve({1}, {1}), std::nullopt};
  EXPECT_THROW(compare_runs(a, b), std::invalid_argument);
}

TEST(ExportCurve, RoundtripAndCardinality) {
  TempDir dir;
  std::mt19937_64 rng(29);
  for (int t = 0; t < 100; ++t) {
    const auto run = finnews::testing::random_run(rng, "curve");
    export_curve_csv(run, dir / "curve.csv");
    ASSERT_EQ(parse_loss_log(dir / "curve.csv"), run);
  }
  RunRecord ten{"ten", std::nullopt, {}, std::nullopt};
  for (int e = 1; e <= 10; ++e) ten.points.push_back({e, 1.0 / e, std::nullopt});
  EXPECT_EQ(export_curve_csv(ten, dir / "ten.csv"), 10u);
  const auto text = finnews::testing::read_file(dir / "ten.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 11);
}

TEST(ExportCurve, EmptyRunRejected) {
  TempDir dir;
  EXPECT_THROW(export_curve_csv(RunRecord{}, dir / "x.csv"), std::invalid_argument);
}

TEST(TrainingConfig, Defaults) {
  const auto c = training_config_from_json(nlohmann::json::object());
  EXPECT_EQ(c, TrainingConfig{});
  EXPECT_EQ(c.model_name, "meta-llama/Llama-2-7b-chat-hf");
  EXPECT_EQ(c.learning_rate, 5e-4);
  EXPECT_EQ(c.num_train_epochs, 10);
  EXPECT_EQ(c.max_seq_length, 2048);
  EXPECT_EQ(c.gradient_accumulation_steps, 2);
  EXPECT_TRUE(c.load_in_4bit);
  EXPECT_FALSE(c.load_in_8bit);
  EXPECT_EQ(c.bnb_4bit_quant_type, "nf4");
  EXPECT_EQ(c.lr_scheduler_type, "linear");
}

TEST(TrainingConfig, QuantizationFlagsAreExclusive) {
  EXPECT_THROW(training_config_from_json({{"load_in_4bit", true}, {"load_in_8bit", true}}), std::invalid_argument);
  EXPECT_THROW(training_config_from_json({{"load_in_4bit", false}, {"load_in_8bit", false}}),
               std::invalid_argument);
  const auto eight = training_config_from_json({{"load_in_8bit", true}});
  EXPECT_FALSE(eight.load_in_4bit);
  EXPECT_EQ(eight.quantization(), Quantization::eight_bit);
}

TEST(TrainingConfig, OverrideAndRoundtrip) {
  const auto c = training_config_from_json({{"num_train_epochs", 1}});
  TrainingConfig expected;
  expected.num_train_epochs = 1;
  EXPECT_EQ(c, expected);
  EXPECT_EQ(training_config_from_json(to_json(c)), c);
}

TEST(Quantization, Names) {
  EXPECT_EQ(to_string(Quantization::four_bit), "4bit");
  EXPECT_EQ(parse_quantization("8BIT"), Quantization::eight_bit);
  EXPECT_FALSE(parse_quantization("16bit"));
}
