#include "sensordash/format.hpp"

#include <cstdio>

namespace sensordash {

std::string format_decimal(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  std::string out = buf;
  if (out.find('.') != std::string::npos) {
    while (out.back() == '0') out.pop_back();
    if (out.back() == '.') out.pop_back();
  }
  if (out == "-0") out = "0";
  return out;
}

std::string format_mean_sd(double mean, double sd, int decimals) {
  return format_decimal(mean, decimals) + " (" + format_decimal(sd, decimals) + ")";
}

}  // namespace sensordash
