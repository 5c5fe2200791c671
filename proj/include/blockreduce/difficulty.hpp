#pragma once

#include <vector>

namespace blockreduce {

/// Nested per-order work thresholds. Entry r-1 is the probability p_r that a
/// single attempt meets order r; p_1 < p_2 < ... < p_R, so meeting order r
/// implies meeting every higher order.
class DifficultySchedule {
 public:
  DifficultySchedule() = default;
  explicit DifficultySchedule(std::vector<double> thresholds);

  /// `bits[r-1]` leading zero bits required at order r, i.e. p_r = 2^-bits.
  static DifficultySchedule from_leading_zero_bits(const std::vector<int>& bits);

  int num_orders() const noexcept { return static_cast<int>(thresholds_.size()); }
  double threshold(int order) const;
  const std::vector<double>& thresholds() const noexcept { return thresholds_; }

  /// Expected attempts represented by one block counted in an order-r chain.
  double weight(int order) const { return 1.0 / threshold(order); }

 private:
  std::vector<double> thresholds_;
};

/// Lowest (hardest) order whose threshold `work_sample` meets. The caller only
/// passes samples that already meet p_R.
int classify_order(double work_sample, const DifficultySchedule& schedule);

/// Probability that a block meeting `from_order` also meets `to_order`
/// (to_order <= from_order): p_to / p_from.
double coincidence_probability(const DifficultySchedule& schedule, int from_order, int to_order);

}  // namespace blockreduce
