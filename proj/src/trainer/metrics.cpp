#include "pacer/trainer/metrics.hpp"

#include <cstdio>

#include "pacer/errors.hpp"

namespace pacer::trainer {

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

MetricsWriter::MetricsWriter(const std::string& path, bool timing)
    : out_(path, std::ios::trunc), timing_(timing) {
  if (!out_) throw DataError("cannot open metrics csv: " + path);
  out_ << "step,wall_ms,critic_loss,actor_loss,d_m,v_psi,alpha,beta,"
          "eval_return_mean,eval_return_std\n";
}

void MetricsWriter::begin_row(double step, std::optional<double> wall_ms) {
  if (step <= last_step_)
    throw DataError("metrics rows must be strictly increasing in step");
  last_step_ = step;
  out_ << fmt(step) << ',';
  if (timing_ && wall_ms) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", *wall_ms);
    out_ << buf;
  }
}

void MetricsWriter::train_row(const TrainRow& r, std::optional<double> wall_ms) {
  if (!out_.is_open()) return;
  begin_row(r.step, wall_ms);
  out_ << ',' << fmt(r.critic_loss) << ',' << fmt(r.actor_loss) << ','
       << fmt(r.d_m) << ',' << fmt(r.v_psi) << ',' << fmt(r.alpha) << ','
       << fmt(r.beta) << ",,\n";
}

void MetricsWriter::eval_row(const EvalRow& r, std::optional<double> wall_ms) {
  if (!out_.is_open()) return;
  begin_row(r.step, wall_ms);
  out_ << ",,,,,," << ',' << fmt(r.mean_return) << ',' << fmt(r.std_return)
       << "\n";
}

void MetricsWriter::flush() {
  if (out_.is_open()) out_.flush();
}

}  // namespace pacer::trainer
