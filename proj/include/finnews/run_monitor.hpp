#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace finnews {

enum class Quantization { four_bit, eight_bit };

std::string_view to_string(Quantization q);
std::optional<Quantization> parse_quantization(std::string_view text);

// Fine-tuning hyperparameters as consumed by the external trainer. Defaults
// reproduce the Llama-2 7B chat fine-tune.
struct TrainingConfig {
  std::string model_name = "meta-llama/Llama-2-7b-chat-hf";
  double learning_rate = 5e-4;
  int num_train_epochs = 10;
  int max_seq_length = 2048;
  int gradient_accumulation_steps = 2;
  bool load_in_4bit = true;
  bool load_in_8bit = false;
  std::string bnb_4bit_quant_type = "nf4";
  std::string lr_scheduler_type = "linear";

  bool operator==(const TrainingConfig&) const = default;

  Quantization quantization() const {
    return load_in_4bit ? Quantization::four_bit : Quantization::eight_bit;
  }
};

// Absent keys take defaults; throws std::invalid_argument unless exactly one
// of load_in_4bit / load_in_8bit is true.
TrainingConfig training_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainingConfig& config);

struct LossCurvePoint {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> eval_loss;

  bool operator==(const LossCurvePoint&) const = default;
};

struct RunRecord {
  std::string run_id;
  std::optional<Quantization> quantization;
  std::vector<LossCurvePoint> points;
  std::optional<TrainingConfig> config;

  bool operator==(const RunRecord&) const = default;
};

class LossLogError : public std::runtime_error {
 public:
  LossLogError(const std::string& message, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline constexpr std::string_view kLossLogHeader = "epoch,loss,eval_loss";

// Header must be exactly `epoch,loss,eval_loss`; epochs strictly increase;
// eval_loss may be empty. run_id is the file stem.
RunRecord parse_loss_log(const std::filesystem::path& path);
RunRecord parse_loss_log_text(std::string_view content, std::string run_id = {});

std::size_t export_curve_csv(const RunRecord& run, const std::filesystem::path& path);
std::string render_curve_csv(const RunRecord& run);

// First epoch that closes a window of `patience` consecutive strict eval-loss
// increases during which train loss never rises. Points without eval_loss
// are skipped. Throws std::invalid_argument with fewer than patience + 1
// eval points.
std::optional<int> detect_overfit(const std::vector<LossCurvePoint>& points, int patience);

struct EpochDivergence {
  int epoch = 0;
  double train = 0.0;
  std::optional<double> eval;
};

struct DivergenceSummary {
  std::vector<EpochDivergence> per_epoch;
  double max_train = 0.0;
  double mean_train = 0.0;
  // Over epochs where both runs have eval_loss; nullopt when there are none.
  std::optional<double> max_eval;
  std::optional<double> mean_eval;
};

// Throws std::invalid_argument when the epoch sets differ.
DivergenceSummary compare_runs(const RunRecord& a, const RunRecord& b);

}  // namespace finnews
