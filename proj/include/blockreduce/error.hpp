#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blockreduce {

enum class ErrorKind {
  root_has_no_parent,
  not_a_leaf,
  invalid_path,
  invalid_hierarchy,
  invalid_schedule,
  sample_meets_no_threshold,
  order_out_of_range,
  same_origin_destination,
  infeasible_degree,
  disconnected_overlay,
  too_few_nodes,
  domain_error,
  q_too_large,
  config_invalid,
  config_parse,
  scenario_invalid,
  invariant_violation,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a machine-readable kind so the
// CLI can emit a structured error report.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace blockreduce
