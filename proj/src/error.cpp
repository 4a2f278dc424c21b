#include "lageffect/error.hpp"

namespace lageffect {

const char* errc_name(errc code) {
  switch (code) {
    case errc::missing_column: return "missing_column";
    case errc::non_contiguous_index: return "non_contiguous_index";
    case errc::non_binary_decision: return "non_binary_decision";
    case errc::non_finite_value: return "non_finite_value";
    case errc::spec_column_unknown: return "spec_column_unknown";
    case errc::separation: return "separation";
    case errc::rank_deficient: return "rank_deficient";
    case errc::not_converged: return "not_converged";
    case errc::no_rows: return "no_rows";
    case errc::no_control_rows: return "no_control_rows";
    case errc::singular_bread: return "singular_bread";
    case errc::zero_variance: return "zero_variance";
    case errc::empty_conditioning_cell: return "empty_conditioning_cell";
    case errc::k_star_never_reached: return "k_star_never_reached";
    case errc::invalid_config: return "invalid_config";
    case errc::io_error: return "io_error";
  }
  return "unknown";
}

}  // namespace lageffect
