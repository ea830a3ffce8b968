#pragma once

#include <string>

#include "ggpfr/fit.hpp"

namespace ggpfr {

inline constexpr const char* kModelFormatTag = "ggpfr-model";
inline constexpr const char* kModelFormatVersion = "v1";

// Line-oriented key=value text. Vectors are written as "key=n v1 .. vn" and
// matrices as a "matrix name rows cols" header followed by rows rows of
// cols values, all with 17 significant digits. Group posteriors keep their
// mode and curvature; Gram matrices and factors are rebuilt on load.
std::string format_model(const FittedModel& model);
FittedModel parse_model(const std::string& text);

void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);

}  // namespace ggpfr
