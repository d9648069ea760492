#include "sensordash/codec.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace sensordash::codec {
namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

template <typename Int>
Int parse_unsigned(std::string_view field, const char* what) {
  if (!all_digits(field) || (field.size() > 1 && field.front() == '0')) {
    throw MalformedError(std::string("non-numeric ") + what);
  }
  Int out{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw MalformedError(std::string(what) + " out of range");
  }
  return out;
}

// -?D+(.D{1,6})? with no redundant leading zero in the integer part.
bool is_plain_decimal(std::string_view s) {
  if (!s.empty() && s.front() == '-') s.remove_prefix(1);
  const auto dot = s.find('.');
  const auto int_part = s.substr(0, dot);
  if (!all_digits(int_part) || (int_part.size() > 1 && int_part.front() == '0')) return false;
  if (dot == std::string_view::npos) return true;
  const auto frac = s.substr(dot + 1);
  return all_digits(frac) && frac.size() <= 6;
}

double parse_value(std::string_view field) {
  if (!is_plain_decimal(field)) throw MalformedError("value is not a plain decimal");
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(out)) {
    throw MalformedError("value is not finite");
  }
  if (std::fabs(out) > kMaxAbsValue) throw MalformedError("value out of range");
  return out;
}

}  // namespace

std::string format_value(double value) {
  std::array<char, 64> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.6f", value);
  std::string out(buf.data(), static_cast<std::size_t>(n));
  if (const auto dot = out.find('.'); dot != std::string::npos) {
    while (out.back() == '0') out.pop_back();
    if (out.back() == '.') out.pop_back();
  }
  if (out == "-0") out = "0";
  return out;
}

void validate(const SensorReading& reading) {
  if (!is_valid_identifier(reading.node_id)) {
    throw ValidationError("invalid node_id '" + reading.node_id + "'");
  }
  if (!std::isfinite(reading.value) || std::fabs(reading.value) > kMaxAbsValue) {
    throw ValidationError("reading value must be finite and within +-1e12");
  }
}

std::string encode(const SensorReading& reading) {
  validate(reading);
  std::string out;
  out.reserve(64);
  out += kMagic;
  out += '|';
  out += reading.node_id;
  out += '|';
  out += to_string(reading.sensor_type);
  out += '|';
  out += std::to_string(reading.seq);
  out += '|';
  out += std::to_string(reading.timestamp_ms);
  out += '|';
  out += format_value(reading.value);
  return out;
}

SensorReading decode(std::string_view datagram) {
  if (datagram.size() > kMaxDatagramBytes) throw MalformedError("datagram exceeds 128 bytes");

  std::array<std::string_view, 6> fields;
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    const auto bar = datagram.find('|', start);
    const auto field = datagram.substr(start, bar == std::string_view::npos ? bar : bar - start);
    if (count == 0 && field != kMagic) {
      throw VersionError("unsupported magic/version '" + std::string(field.substr(0, 8)) + "'");
    }
    if (count < fields.size()) fields[count] = field;
    ++count;
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  if (count != fields.size()) {
    throw MalformedError("expected 6 fields, got " + std::to_string(count));
  }

  SensorReading reading;
  if (!is_valid_identifier(fields[1])) throw MalformedError("bad node identifier");
  reading.node_id = std::string(fields[1]);

  if (!is_valid_identifier(fields[2])) throw MalformedError("bad sensor type field");
  const auto type = parse_sensor_type(fields[2]);
  if (!type) throw UnknownTypeError("unknown sensor type '" + std::string(fields[2]) + "'");
  reading.sensor_type = *type;

  reading.seq = parse_unsigned<std::uint32_t>(fields[3], "seq");
  reading.timestamp_ms = parse_unsigned<std::uint64_t>(fields[4], "timestamp");
  reading.value = parse_value(fields[5]);
  return reading;
}

}  // namespace sensordash::codec
