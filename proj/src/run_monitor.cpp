#include "finnews/run_monitor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "finnews/text.hpp"

namespace finnews {

namespace {

double parse_loss(std::string_view field, const char* name, std::size_t line) {
  const auto v = parse_double(field);
  if (!v) throw LossLogError(std::string("non-numeric ") + name + " '" + std::string(field) + "'", line);
  if (!std::isfinite(*v) || *v < 0.0) {
    throw LossLogError(std::string(name) + " must be finite and non-negative", line);
  }
  return *v;
}

}  // namespace

std::string_view to_string(Quantization q) { return q == Quantization::four_bit ? "4bit" : "8bit"; }

std::optional<Quantization> parse_quantization(std::string_view text) {
  const std::string t = to_lower_ascii(trim(text));
  if (t == "4bit" || t == "4") return Quantization::four_bit;
  if (t == "8bit" || t == "8") return Quantization::eight_bit;
  return std::nullopt;
}

TrainingConfig training_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("training config must be a JSON object");
  TrainingConfig c;
  try {
    c.model_name = j.value("model_name", c.model_name);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.num_train_epochs = j.value("num_train_epochs", c.num_train_epochs);
    c.max_seq_length = j.value("max_seq_length", c.max_seq_length);
    c.gradient_accumulation_steps = j.value("gradient_accumulation_steps", c.gradient_accumulation_steps);
    c.bnb_4bit_quant_type = j.value("bnb_4bit_quant_type", c.bnb_4bit_quant_type);
    c.lr_scheduler_type = j.value("lr_scheduler_type", c.lr_scheduler_type);
    // Setting only one flag implies the other.
    const bool has4 = j.contains("load_in_4bit");
    const bool has8 = j.contains("load_in_8bit");
    if (has4) c.load_in_4bit = j.at("load_in_4bit").get<bool>();
    if (has8) c.load_in_8bit = j.at("load_in_8bit").get<bool>();
    if (has4 && !has8) c.load_in_8bit = !c.load_in_4bit;
    if (has8 && !has4) c.load_in_4bit = !c.load_in_8bit;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("training config: ") + e.what());
  }
  if (c.load_in_4bit == c.load_in_8bit) {
    throw std::invalid_argument("training config: exactly one of load_in_4bit and load_in_8bit must be true");
  }
  if (c.num_train_epochs < 1 || c.max_seq_length < 1 || c.gradient_accumulation_steps < 1 ||
      !(c.learning_rate > 0.0)) {
    throw std::invalid_argument("training config: numeric fields must be positive");
  }
  return c;
}

nlohmann::json to_json(const TrainingConfig& c) {
  return {{"model_name", c.model_name},
          {"learning_rate", c.learning_rate},
          {"num_train_epochs", c.num_train_epochs},
          {"max_seq_length", c.max_seq_length},
          {"gradient_accumulation_steps", c.gradient_accumulation_steps},
          {"load_in_4bit", c.load_in_4bit},
          {"load_in_8bit", c.load_in_8bit},
          {"bnb_4bit_quant_type", c.bnb_4bit_quant_type},
          {"lr_scheduler_type", c.lr_scheduler_type}};
}

RunRecord parse_loss_log_text(std::string_view content, std::string run_id) {
  RunRecord run;
  run.run_id = std::move(run_id);
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kLossLogHeader) {
        throw LossLogError("missing or wrong header, expected '" + std::string(kLossLogHeader) + "'", line_no);
      }
      header_seen = true;
      continue;
    }
    if (trim(line).empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 3) throw LossLogError("expected 3 fields", line_no);

    LossCurvePoint p;
    const std::string epoch_text = trim(fields[0]);
    const auto res = std::from_chars(epoch_text.data(), epoch_text.data() + epoch_text.size(), p.epoch);
    if (res.ec != std::errc{} || res.ptr != epoch_text.data() + epoch_text.size() || p.epoch < 1) {
      throw LossLogError("epoch must be a positive integer", line_no);
    }
    if (!run.points.empty() && p.epoch <= run.points.back().epoch) {
      throw LossLogError("epochs are not strictly increasing", line_no);
    }
    p.train_loss = parse_loss(fields[1], "loss", line_no);
    if (!trim(fields[2]).empty()) p.eval_loss = parse_loss(fields[2], "eval_loss", line_no);
    run.points.push_back(p);
  }
  if (!header_seen) throw LossLogError("empty loss log: missing header");
  return run;
}

RunRecord parse_loss_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LossLogError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_loss_log_text(ss.str(), path.stem().string());
}

std::string render_curve_csv(const RunRecord& run) {
  std::string out(kLossLogHeader);
  out += '\n';
  for (const auto& p : run.points) {
    out += std::to_string(p.epoch) + ',' + format_double(p.train_loss) + ',' +
           (p.eval_loss ? format_double(*p.eval_loss) : std::string{}) + '\n';
  }
  return out;
}

std::size_t export_curve_csv(const RunRecord& run, const std::filesystem::path& path) {
  if (run.points.empty()) throw std::invalid_argument("export_curve_csv: run has no points");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << render_curve_csv(run);
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return run.points.size();
}

std::optional<int> detect_overfit(const std::vector<LossCurvePoint>& points, int patience) {
  if (patience < 1) throw std::invalid_argument("detect_overfit: patience must be >= 1");
  std::vector<const LossCurvePoint*> evals;
  for (const auto& p : points) {
    if (p.eval_loss) evals.push_back(&p);
  }
  const auto window = static_cast<std::size_t>(patience);
  if (evals.size() < window + 1) {
    throw std::invalid_argument("detect_overfit: need at least patience + 1 points with eval_loss");
  }
  std::size_t rising = 0;
  for (std::size_t i = 1; i < evals.size(); ++i) {
    const bool eval_up = *evals[i]->eval_loss > *evals[i - 1]->eval_loss;
    const bool train_flat_or_down = evals[i]->train_loss <= evals[i - 1]->train_loss;
    rising = (eval_up && train_flat_or_down) ? rising + 1 : 0;
    if (rising >= window) return evals[i]->epoch;
  }
  return std::nullopt;
}

DivergenceSummary compare_runs(const RunRecord& a, const RunRecord& b) {
  const bool same_epochs =
      a.points.size() == b.points.size() &&
      std::equal(a.points.begin(), a.points.end(), b.points.begin(),
                 [](const LossCurvePoint& x, const LossCurvePoint& y) { return x.epoch == y.epoch; });
  if (!same_epochs) throw std::invalid_argument("compare_runs: runs cover different epochs");

  DivergenceSummary s;
  double train_sum = 0.0, eval_sum = 0.0;
  std::size_t eval_n = 0;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EpochDivergence d;
    d.epoch = a.points[i].epoch;
    d.train = std::abs(a.points[i].train_loss - b.points[i].train_loss);
    s.max_train = std::max(s.max_train, d.train);
    train_sum += d.train;
    if (a.points[i].eval_loss && b.points[i].eval_loss) {
      d.eval = std::abs(*a.points[i].eval_loss - *b.points[i].eval_loss);
      s.max_eval = std::max(s.max_eval.value_or(0.0), *d.eval);
      eval_sum += *d.eval;
      ++eval_n;
    }
    s.per_epoch.push_back(d);
  }
  if (!a.points.empty()) s.mean_train = train_sum / static_cast<double>(a.points.size());
  if (eval_n) s.mean_eval = eval_sum / static_cast<double>(eval_n);
  return s;
}

}  // namespace finnews
