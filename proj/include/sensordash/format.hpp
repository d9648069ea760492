#pragma once

#include <string>

namespace sensordash {

/// Rounds to `decimals` places and drops trailing zeros: 3.00 -> "3", 24.60 -> "24.6".
[[nodiscard]] std::string format_decimal(double value, int decimals);

/// "mean (sd)" with both parts formatted by format_decimal.
[[nodiscard]] std::string format_mean_sd(double mean, double sd, int decimals);

}  // namespace sensordash
