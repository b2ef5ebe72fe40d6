// Device descriptors, expression maps and the wire records sent to devices.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aifml/inference.hpp"

namespace aifml {

/// Half-open [lo, hi) slice of an output domain; the last entry of a map is
/// closed on the right.
struct ExpressionInterval {
  double lo = 0.0;
  double hi = 0.0;
  std::string expression;

  bool operator==(const ExpressionInterval&) const = default;
};

struct ExpressionMap {
  std::vector<ExpressionInterval> entries;

  bool operator==(const ExpressionMap&) const = default;
};

/// Problems with `m` as a partition of [lo, hi]; empty when it is one.
std::vector<std::string> check_expression_map(const ExpressionMap& m, double lo, double hi);

/// Expression of the interval holding `value`. Values outside the map are
/// clamped to its ends. Throws std::invalid_argument on an empty map.
const std::string& map_expression(double value, const ExpressionMap& m);

enum class DeviceKind { kebbi, lt, mooncar, custom };
enum class Transport { mqtt, http };

std::string_view to_string(DeviceKind k);
std::string_view to_string(Transport t);

struct DeviceDescriptor {
  std::string device_id;
  DeviceKind kind = DeviceKind::kebbi;
  Transport transport = Transport::mqtt;
  /// MQTT topic or http://host:port/path URL.
  std::string address;
  /// Output variable whose crisp value drives the expression.
  std::string output;
  ExpressionMap expression_map;

  bool operator==(const DeviceDescriptor&) const = default;
};

/// The topic a device with this id listens on.
std::string device_topic(std::string_view device_id);

/// Problems with `d` against `sys`; empty when the device can be registered.
std::vector<std::string> check_device(const DeviceDescriptor& d, const FuzzySystem& sys);

/// The record published to a device.
struct InferenceMessage {
  std::uint64_t sequence = 0;
  std::string system_name;
  std::map<std::string, double> inputs;
  std::map<std::string, double> outputs;
  std::string expression;
  std::map<std::string, bool> defaulted;
  std::int64_t timestamp = 0;  // ms since the epoch

  bool operator==(const InferenceMessage&) const = default;
};

InferenceMessage make_message(const DeviceDescriptor& device, std::uint64_t sequence, const FuzzySystem& sys,
                              const CrispInputs& inputs, const InferenceResult& result, std::int64_t timestamp);

std::int64_t now_ms();

// JSON forms. Parsing throws std::invalid_argument naming the bad field.
nlohmann::ordered_json to_json(const InferenceMessage& m);
InferenceMessage message_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const DeviceDescriptor& d);
DeviceDescriptor device_from_json(const nlohmann::json& j);
/// {"outputs":{...},"defaulted":{...},"rule_activations":{...}}, declaration order.
nlohmann::ordered_json to_json(const InferenceResult& r);

/// Compact text of to_json(r); the body of POST /infer and `infer --json`.
std::string result_json(const InferenceResult& r);

/// Parses {"name": number, ...} into inputs for `sys`. Throws
/// std::invalid_argument on a non-object, a non-numeric value, an unknown
/// name or a missing input.
CrispInputs inputs_from_json(const nlohmann::json& j, const FuzzySystem& sys);

}  // namespace aifml
