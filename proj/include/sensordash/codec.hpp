#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "sensordash/sensor_types.hpp"

namespace sensordash::codec {

// Wire format, one reading per UDP datagram:
//   SDV1|<node_id>|<sensor_type>|<seq>|<timestamp_ms>|<value>
// The value is a plain decimal with at most six fractional digits.

inline constexpr std::string_view kMagic = "SDV1";
inline constexpr std::size_t kMaxDatagramBytes = 128;
/// Largest |value| accepted by encode; keeps every datagram under the byte cap.
inline constexpr double kMaxAbsValue = 1e12;

class DecodeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class VersionError : public DecodeError {
public:
  using DecodeError::DecodeError;
};

class MalformedError : public DecodeError {
public:
  using DecodeError::DecodeError;
};

class UnknownTypeError : public DecodeError {
public:
  using DecodeError::DecodeError;
};

/// Renders `value` rounded to six fractional digits with trailing zeros removed.
[[nodiscard]] std::string format_value(double value);

/// Throws ValidationError when the reading has a bad node id or a
/// non-finite / out-of-range value.
void validate(const SensorReading& reading);

/// Values are rounded to 1e-6, so decode(encode(r)) == r holds exactly for
/// readings whose value already sits on that grid.
[[nodiscard]] std::string encode(const SensorReading& reading);

[[nodiscard]] SensorReading decode(std::string_view datagram);

}  // namespace sensordash::codec
