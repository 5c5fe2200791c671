#include "blockreduce/difficulty.hpp"

#include <cmath>
#include <string>

#include "blockreduce/error.hpp"

namespace blockreduce {

DifficultySchedule::DifficultySchedule(std::vector<double> thresholds)
    : thresholds_(std::move(thresholds)) {
  if (thresholds_.empty()) {
    throw Error(ErrorKind::invalid_schedule, "difficulty schedule needs at least one order");
  }
  for (std::size_t k = 0; k < thresholds_.size(); ++k) {
    const double p = thresholds_[k];
    if (!(p > 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::invalid_schedule,
                  "threshold for order " + std::to_string(k + 1) + " must lie in (0, 1]");
    }
    if (k > 0 && !(thresholds_[k - 1] < p)) {
      throw Error(ErrorKind::invalid_schedule,
                  "thresholds must be strictly nested: p_" + std::to_string(k) + " < p_" +
                      std::to_string(k + 1));
    }
  }
}

DifficultySchedule DifficultySchedule::from_leading_zero_bits(const std::vector<int>& bits) {
  std::vector<double> p;
  p.reserve(bits.size());
  for (int b : bits) {
    if (b < 0 || b > 256) throw Error(ErrorKind::invalid_schedule, "leading zero bits must be in [0, 256]");
    p.push_back(std::ldexp(1.0, -b));
  }
  return DifficultySchedule(std::move(p));
}

double DifficultySchedule::threshold(int order) const {
  if (order < 1 || order > num_orders()) {
    throw Error(ErrorKind::order_out_of_range, "order " + std::to_string(order) + " outside schedule");
  }
  return thresholds_[static_cast<std::size_t>(order - 1)];
}

int classify_order(double work_sample, const DifficultySchedule& schedule) {
  const auto& p = schedule.thresholds();
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (work_sample < p[k]) return static_cast<int>(k + 1);
  }
  throw Error(ErrorKind::sample_meets_no_threshold,
              "work sample " + std::to_string(work_sample) + " does not meet the leaf threshold");
}

double coincidence_probability(const DifficultySchedule& schedule, int from_order, int to_order) {
  const int r = schedule.num_orders();
  if (from_order < 1 || from_order > r || to_order < 1 || to_order > r || to_order > from_order) {
    throw Error(ErrorKind::order_out_of_range,
                "coincidence probability needs 1 <= to_order <= from_order <= R");
  }
  return schedule.threshold(to_order) / schedule.threshold(from_order);
}

}  // namespace blockreduce
