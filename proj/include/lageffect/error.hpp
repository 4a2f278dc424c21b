#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lageffect {

enum class errc {
  missing_column,
  non_contiguous_index,
  non_binary_decision,
  non_finite_value,
  spec_column_unknown,
  separation,
  rank_deficient,
  not_converged,
  no_rows,
  no_control_rows,
  singular_bread,
  zero_variance,
  empty_conditioning_cell,
  k_star_never_reached,
  invalid_config,
  io_error,
};

const char* errc_name(errc code);

// Library-wide exception. `columns` is filled for rank_deficient errors with
// the offending design column indices.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}
  Error(errc code, const std::string& message, std::vector<int> columns)
      : Error(code, message) {
    columns_ = std::move(columns);
  }

  errc code() const { return code_; }
  const char* category() const { return errc_name(code_); }
  const std::vector<int>& columns() const { return columns_; }

 private:
  errc code_;
  std::vector<int> columns_;
};

}  // namespace lageffect
