#pragma once

#include <fstream>
#include <optional>
#include <string>

namespace pacer::trainer {

struct TrainRow {
  double step = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double d_m = 0.0;
  double v_psi = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

struct EvalRow {
  double step = 0.0;
  double mean_return = 0.0;
  double std_return = 0.0;
};

// Append-only CSV with one shared schema for gradient and evaluation rows:
//   step,wall_ms,critic_loss,actor_loss,d_m,v_psi,alpha,beta,
//   eval_return_mean,eval_return_std
// Rows are strictly increasing in step: gradient rows take integer steps,
// evaluation rows sit at half-steps. The wall_ms column is filled only when
// timing is enabled so that default runs are byte-reproducible.
class MetricsWriter {
 public:
  MetricsWriter() = default;
  explicit MetricsWriter(const std::string& path, bool timing = false);

  bool open() const { return out_.is_open(); }
  void train_row(const TrainRow& row, std::optional<double> wall_ms = {});
  void eval_row(const EvalRow& row, std::optional<double> wall_ms = {});
  void flush();

 private:
  void begin_row(double step, std::optional<double> wall_ms);

  std::ofstream out_;
  bool timing_ = false;
  double last_step_ = -1.0;
};

}  // namespace pacer::trainer
