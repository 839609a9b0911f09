#include "audiorank/errors.hpp"

namespace audiorank {

const char* errc_name(errc code) noexcept {
  switch (code) {
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::degenerate_vector: return "DegenerateVector";
    case errc::empty_input: return "EmptyInput";
    case errc::non_positive_temperature: return "NonPositiveTemperature";
    case errc::non_finite_input: return "NonFiniteInput";
    case errc::out_of_domain: return "OutOfDomain";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::shape_mismatch: return "ShapeMismatch";
    case errc::non_square_batch: return "NonSquareBatch";
    case errc::stale_cache: return "StaleCache";
    case errc::invalid_dimension: return "InvalidDimension";
    case errc::batch_too_large: return "BatchTooLarge";
    case errc::step_out_of_range: return "StepOutOfRange";
    case errc::non_finite_gradient: return "NonFiniteGradient";
    case errc::non_finite_loss: return "NonFiniteLoss";
    case errc::io_error: return "IoError";
    case errc::format_error: return "FormatError";
    case errc::non_finite_payload: return "NonFinitePayload";
    case errc::index_out_of_range: return "IndexOutOfRange";
    case errc::missing_split: return "MissingSplit";
    case errc::duplicate_item_id: return "DuplicateItemId";
    case errc::missing_caption: return "MissingCaption";
    case errc::invalid_spec: return "InvalidSpec";
    case errc::invalid_config: return "InvalidConfig";
    case errc::empty_relevant_set: return "EmptyRelevantSet";
    case errc::zero_variance: return "ZeroVariance";
    case errc::invalid_df: return "InvalidDf";
    case errc::numeric_failure: return "NumericFailure";
  }
  return "UnknownError";
}

}  // namespace audiorank
