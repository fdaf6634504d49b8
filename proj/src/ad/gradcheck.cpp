#include "pacer/ad/gradcheck.hpp"

#include <cmath>

#include "pacer/errors.hpp"

namespace pacer::ad {

namespace {
double evaluate(const ScalarBuilder& f, const std::vector<double>& params) {
  Tape tape;
  std::vector<double> sink(params.size(), 0.0);
  const ScalarBuild b = f(tape, params, sink.data());
  return tape.value(b.out_node)[0];
}
}  // namespace

std::vector<double> tape_gradient(const ScalarBuilder& f,
                                  const std::vector<double>& params) {
  Tape tape;
  std::vector<double> sink(params.size(), 0.0);
  const ScalarBuild b = f(tape, params, sink.data());
  if (b.out_node < 0) throw UsageError("tape_gradient: builder returned no output");
  tape.backward(b.out_node);
  std::vector<double> grad = sink;
  if (b.param_node >= 0) {
    const Vec& adj = tape.adjoint(b.param_node);
    for (size_t i = 0; i < grad.size() && i < adj.size(); ++i) grad[i] += adj[i];
  }
  return grad;
}

GradCheckReport gradient_check(const ScalarBuilder& f,
                               const std::vector<double>& params, double tol,
                               double fd_step) {
  const std::vector<double> grad = tape_gradient(f, params);
  GradCheckReport report;
  std::vector<double> p = params;
  for (size_t i = 0; i < params.size(); ++i) {
    p[i] = params[i] + fd_step;
    const double hi = evaluate(f, p);
    p[i] = params[i] - fd_step;
    const double lo = evaluate(f, p);
    p[i] = params[i];
    const double fd = (hi - lo) / (2.0 * fd_step);
    const double denom = std::max({1.0, std::abs(grad[i]), std::abs(fd)});
    const double rel = std::abs(grad[i] - fd) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_index = static_cast<int>(i);
    }
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

}  // namespace pacer::ad
