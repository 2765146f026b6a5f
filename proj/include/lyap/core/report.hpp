#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "lyap/core/error.hpp"

namespace lyap {

// Outcome of any axiom or certificate check.
struct CheckReport {
  std::string lawName;
  bool passed = true;
  // Set when the check could not decide (finite-horizon tail). Never passed.
  bool inconclusive = false;
  std::size_t samplesChecked = 0;
  double worstResidual = 0.0;
  std::optional<std::string> counterexample;
  std::string note;
};

// Combine sub-checks into one law. The first counterexample in order wins.
inline CheckReport merge(std::string name, const CheckReport& a, const CheckReport& b) {
  CheckReport out;
  out.lawName = std::move(name);
  out.passed = a.passed && b.passed;
  out.inconclusive = a.inconclusive || b.inconclusive;
  out.samplesChecked = a.samplesChecked + b.samplesChecked;
  out.worstResidual = std::max(a.worstResidual, b.worstResidual);
  out.counterexample = a.counterexample ? a.counterexample : b.counterexample;
  if (!a.note.empty() && !b.note.empty())
    out.note = a.note + "; " + b.note;
  else
    out.note = a.note.empty() ? b.note : a.note;
  return out;
}

// Thrown when a theorem-level operation is called with a failed premise.
struct PreconditionFailed : Error {
  explicit PreconditionFailed(CheckReport r)
      : Error("precondition failed: " + r.lawName +
              (r.counterexample ? " at " + *r.counterexample : std::string{})),
        report(std::move(r)) {}
  CheckReport report;
};

// Accumulates per-sample observations in sample order.
class ReportBuilder {
 public:
  explicit ReportBuilder(std::string law, double tolerance = 0.0)
      : tolerance_(tolerance) {
    report_.lawName = std::move(law);
  }

  // `residual` is how far the sample is from satisfying the law (<= 0 when
  // satisfied). `violated` is the carrier's own verdict.
  template <class Describe>
  void observe(double residual, bool violated, Describe&& input) {
    ++report_.samplesChecked;
    report_.worstResidual = std::max(report_.worstResidual, residual);
    if (violated) fail(std::forward<Describe>(input)());
  }

  void observe_exact(bool violated, const std::string& input, double residual = 1.0) {
    ++report_.samplesChecked;
    if (violated) {
      report_.worstResidual = std::max(report_.worstResidual, residual);
      fail(input);
    }
  }

  void fail(const std::string& input) {
    report_.passed = false;
    if (!report_.counterexample) report_.counterexample = input;
  }

  void inconclusive(const std::string& input, const std::string& why) {
    report_.passed = false;
    report_.inconclusive = true;
    if (!report_.counterexample) report_.counterexample = input;
    if (report_.note.empty()) report_.note = why;
  }

  // Runs `body`, converting evaluation errors into failures at `input`.
  template <class Body, class Describe>
  void guard(Body&& body, Describe&& input) {
    try {
      body();
    } catch (const InconclusiveTail& e) {
      ++report_.samplesChecked;
      inconclusive(input(), e.what());
    } catch (const EvaluationError& e) {
      ++report_.samplesChecked;
      report_.worstResidual = std::numeric_limits<double>::infinity();
      fail(input());
      if (report_.note.empty()) report_.note = e.what();
    }
  }

  void note(std::string n) { report_.note = std::move(n); }
  double tolerance() const { return tolerance_; }
  const CheckReport& peek() const { return report_; }
  CheckReport finish() && { return std::move(report_); }
  CheckReport finish() const& { return report_; }

 private:
  double tolerance_;
  CheckReport report_;
};

}  // namespace lyap
