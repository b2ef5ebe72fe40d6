#include "aifml/device.hpp"

#include <chrono>
#include <stdexcept>

#include "number_format.hpp"

namespace aifml {

std::vector<std::string> check_expression_map(const ExpressionMap& m, double lo, double hi) {
  std::vector<std::string> out;
  const auto& e = m.entries;
  if (e.empty()) return {"expression map needs at least one entry"};
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto at = "entry " + std::to_string(i) + ": ";
    if (e[i].expression.empty()) out.push_back(at + "empty expression name");
    if (!(e[i].lo < e[i].hi)) out.push_back(at + "interval requires lo < hi");
    if (i > 0 && e[i].lo < e[i - 1].hi) out.push_back(at + "overlaps the previous interval");
    if (i > 0 && e[i].lo > e[i - 1].hi) out.push_back(at + "leaves a gap after the previous interval");
  }
  if (e.front().lo != lo)
    out.push_back("map starts at " + detail::format_number(e.front().lo) + ", domain starts at " +
                  detail::format_number(lo));
  if (e.back().hi != hi)
    out.push_back("map ends at " + detail::format_number(e.back().hi) + ", domain ends at " +
                  detail::format_number(hi));
  return out;
}

const std::string& map_expression(double value, const ExpressionMap& m) {
  const auto& e = m.entries;
  if (e.empty()) throw std::invalid_argument("empty expression map");
  for (std::size_t i = 0; i + 1 < e.size(); ++i)
    if (value < e[i].hi) return e[i].expression;
  return e.back().expression;
}

std::string_view to_string(DeviceKind k) {
  switch (k) {
    case DeviceKind::kebbi: return "kebbi";
    case DeviceKind::lt: return "lt";
    case DeviceKind::mooncar: return "mooncar";
    case DeviceKind::custom: return "custom";
  }
  return "?";
}

std::string_view to_string(Transport t) { return t == Transport::mqtt ? "mqtt" : "http"; }

std::string device_topic(std::string_view device_id) { return "aifml/" + std::string(device_id) + "/infer"; }

std::vector<std::string> check_device(const DeviceDescriptor& d, const FuzzySystem& sys) {
  std::vector<std::string> out;
  if (!is_identifier(d.device_id)) out.push_back("device_id must be an identifier");
  if (d.address.empty()) out.push_back("address must not be empty");
  if (d.transport == Transport::mqtt && !d.address.empty() && d.address != device_topic(d.device_id))
    out.push_back("mqtt address must be '" + device_topic(d.device_id) + "'");
  if (d.transport == Transport::http && d.address.rfind("http://", 0) != 0)
    out.push_back("http address must start with http://");
  const auto* var = sys.find_variable(d.output);
  if (var == nullptr || var->role != Role::output) {
    out.push_back("output '" + d.output + "' is not an output variable of the system");
  } else {
    for (auto& p : check_expression_map(d.expression_map, var->lo, var->hi)) out.push_back("expression_map: " + p);
  }
  return out;
}

InferenceMessage make_message(const DeviceDescriptor& device, std::uint64_t sequence, const FuzzySystem& sys,
                              const CrispInputs& inputs, const InferenceResult& result, std::int64_t timestamp) {
  InferenceMessage m;
  m.sequence = sequence;
  m.system_name = sys.name;
  m.inputs = inputs;
  for (const auto& o : result.outputs) {
    m.outputs[o.variable] = o.value;
    m.defaulted[o.variable] = o.defaulted;
  }
  const auto* designated = result.output(device.output);
  if (designated == nullptr) throw std::invalid_argument("result has no output '" + device.output + "'");
  m.expression = map_expression(designated->value, device.expression_map);
  m.timestamp = timestamp;
  return m;
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw std::invalid_argument("'" + what + "' must be a number");
  return j.get<double>();
}

std::string text(const json& j, const std::string& what) {
  if (!j.is_string()) throw std::invalid_argument("'" + what + "' must be a string");
  return j.get<std::string>();
}

}  // namespace

ordered_json to_json(const InferenceMessage& m) {
  ordered_json j;
  j["sequence"] = m.sequence;
  j["system_name"] = m.system_name;
  j["inputs"] = ordered_json::object();
  for (const auto& [k, v] : m.inputs) j["inputs"][k] = v;
  j["outputs"] = ordered_json::object();
  for (const auto& [k, v] : m.outputs) j["outputs"][k] = v;
  j["expression"] = m.expression;
  j["defaulted"] = ordered_json::object();
  for (const auto& [k, v] : m.defaulted) j["defaulted"][k] = v;
  j["timestamp"] = m.timestamp;
  return j;
}

InferenceMessage message_from_json(const json& j) {
  InferenceMessage m;
  const auto& seq = field(j, "sequence");
  if (!seq.is_number_unsigned()) throw std::invalid_argument("'sequence' must be an unsigned integer");
  m.sequence = seq.get<std::uint64_t>();
  m.system_name = text(field(j, "system_name"), "system_name");
  for (const auto* key : {"inputs", "outputs"}) {
    const auto& obj = field(j, key);
    if (!obj.is_object()) throw std::invalid_argument(std::string("'") + key + "' must be an object");
    auto& dst = std::string(key) == "inputs" ? m.inputs : m.outputs;
    for (const auto& [k, v] : obj.items()) dst[k] = number(v, std::string(key) + "." + k);
  }
  m.expression = text(field(j, "expression"), "expression");
  const auto& def = field(j, "defaulted");
  if (!def.is_object()) throw std::invalid_argument("'defaulted' must be an object");
  for (const auto& [k, v] : def.items()) {
    if (!v.is_boolean()) throw std::invalid_argument("'defaulted." + k + "' must be a boolean");
    m.defaulted[k] = v.get<bool>();
  }
  const auto& ts = field(j, "timestamp");
  if (!ts.is_number_integer()) throw std::invalid_argument("'timestamp' must be an integer");
  m.timestamp = ts.get<std::int64_t>();
  return m;
}

ordered_json to_json(const DeviceDescriptor& d) {
  ordered_json j;
  j["device_id"] = d.device_id;
  j["kind"] = to_string(d.kind);
  j["transport"] = to_string(d.transport);
  j["address"] = d.address;
  j["output"] = d.output;
  j["expression_map"] = ordered_json::array();
  for (const auto& e : d.expression_map.entries)
    j["expression_map"].push_back(ordered_json{{"lo", e.lo}, {"hi", e.hi}, {"expression", e.expression}});
  return j;
}

DeviceDescriptor device_from_json(const json& j) {
  DeviceDescriptor d;
  d.device_id = text(field(j, "device_id"), "device_id");
  const auto kind = text(field(j, "kind"), "kind");
  if (kind == "kebbi")
    d.kind = DeviceKind::kebbi;
  else if (kind == "lt")
    d.kind = DeviceKind::lt;
  else if (kind == "mooncar")
    d.kind = DeviceKind::mooncar;
  else if (kind == "custom")
    d.kind = DeviceKind::custom;
  else
    throw std::invalid_argument("unknown device kind '" + kind + "'");
  const auto transport = j.contains("transport") ? text(j["transport"], "transport") : std::string("mqtt");
  if (transport == "mqtt")
    d.transport = Transport::mqtt;
  else if (transport == "http")
    d.transport = Transport::http;
  else
    throw std::invalid_argument("unknown transport '" + transport + "'");
  if (j.contains("address"))
    d.address = text(j["address"], "address");
  else if (d.transport == Transport::mqtt)
    d.address = device_topic(d.device_id);
  d.output = text(field(j, "output"), "output");
  const auto& map = field(j, "expression_map");
  if (!map.is_array()) throw std::invalid_argument("'expression_map' must be an array");
  for (const auto& e : map)
    d.expression_map.entries.push_back(
        {number(field(e, "lo"), "lo"), number(field(e, "hi"), "hi"), text(field(e, "expression"), "expression")});
  return d;
}

ordered_json to_json(const InferenceResult& r) {
  ordered_json j;
  j["outputs"] = ordered_json::object();
  j["defaulted"] = ordered_json::object();
  for (const auto& o : r.outputs) {
    j["outputs"][o.variable] = o.value;
    j["defaulted"][o.variable] = o.defaulted;
  }
  j["rule_activations"] = ordered_json::object();
  for (const auto& a : r.rule_activations) j["rule_activations"][a.rule_id] = a.strength;
  return j;
}

std::string result_json(const InferenceResult& r) { return to_json(r).dump(); }

CrispInputs inputs_from_json(const json& j, const FuzzySystem& sys) {
  if (!j.is_object()) throw std::invalid_argument("inputs must be a JSON object");
  CrispInputs inputs;
  for (const auto& [k, v] : j.items()) {
    const auto* var = sys.find_variable(k);
    if (var == nullptr || var->role != Role::input) throw std::invalid_argument("unknown input variable '" + k + "'");
    inputs[k] = number(v, k);
  }
  for (const auto* var : sys.inputs())
    if (!inputs.count(var->name)) throw std::invalid_argument("missing input '" + var->name + "'");
  return inputs;
}

}  // namespace aifml
