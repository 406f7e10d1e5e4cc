#pragma once

// JSON instance files:
//   {"tasks":[{"id":1,"arrival":0.0,"deadline":10.0,"bits":4096,"energy":"f0","tau_min":1.0e-6}],
//    "energy_functions":{"f0":{"model":"shannon","n0":1,"gain":1,"bandwidth":50,"p_max":8}}}
// Doubles are written with enough digits to round-trip exactly.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dts/energy.hpp"
#include "dts/errors.hpp"
#include "dts/task_model.hpp"

namespace dts {

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

inline double require_number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) throw ParseError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline json energy_to_json(const EnergyDescriptor& d) {
  json j;
  switch (d.model) {
    case EnergyDescriptor::Model::Shannon:
      j["model"] = "shannon";
      j["n0"] = d.n0;
      j["gain"] = d.gain;
      j["bandwidth"] = d.bandwidth;
      if (d.p_max) j["p_max"] = *d.p_max;
      break;
    case EnergyDescriptor::Model::InversePower:
      j["model"] = "inverse_power";
      j["k"] = d.k;
      j["p"] = d.p;
      break;
  }
  return j;
}

inline EnergyDescriptor energy_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  const json& model = require(j, "model", where);
  if (!model.is_string()) throw ParseError(where + ".model: expected a string");
  EnergyDescriptor d;
  const auto name = model.get<std::string>();
  if (name == "shannon") {
    d.model = EnergyDescriptor::Model::Shannon;
    d.n0 = require_number(j, "n0", where);
    d.gain = require_number(j, "gain", where);
    d.bandwidth = require_number(j, "bandwidth", where);
    if (j.contains("p_max") && !j["p_max"].is_null()) d.p_max = require_number(j, "p_max", where);
  } else if (name == "inverse_power") {
    d.model = EnergyDescriptor::Model::InversePower;
    d.k = require_number(j, "k", where);
    d.p = require_number(j, "p", where);
  } else {
    throw ParseError(where + ".model: unknown energy model '" + name + "'");
  }
  return d;
}

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

}  // namespace detail

inline std::string instance_to_json(const Instance& inst) {
  using nlohmann::json;
  json doc;
  json tasks = json::array();
  for (const Task& t : inst.tasks()) {
    tasks.push_back({{"id", t.id},
                     {"arrival", t.arrival},
                     {"deadline", t.deadline},
                     {"bits", t.bits},
                     {"energy", t.energy},
                     {"tau_min", t.tau_min}});
  }
  doc["tasks"] = std::move(tasks);
  json fns = json::object();
  for (const auto& [name, fn] : inst.energy_functions()) {
    fns[name] = detail::energy_to_json(fn->describe());
  }
  doc["energy_functions"] = std::move(fns);
  if (!inst.note().empty()) doc["horizon_note"] = inst.note();
  return doc.dump(1);
}

inline Instance instance_from_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(detail::line_of_offset(text, e.byte)) + ": " +
                     e.what());
  }
  if (!doc.is_object()) throw ParseError("instance: expected a JSON object");
  const json& fns = detail::require(doc, "energy_functions", "instance");
  if (!fns.is_object()) throw ParseError("energy_functions: expected an object");
  Instance::EnergyTable table;
  for (const auto& [name, desc] : fns.items()) {
    const std::string where = "energy_functions." + name;
    try {
      table.emplace(name, make_energy(detail::energy_from_json(desc, where)));
    } catch (const ParameterError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  const json& tasks_json = detail::require(doc, "tasks", "instance");
  if (!tasks_json.is_array()) throw ParseError("tasks: expected an array");
  std::vector<Task> tasks;
  tasks.reserve(tasks_json.size());
  for (std::size_t i = 0; i < tasks_json.size(); ++i) {
    const json& tj = tasks_json[i];
    const std::string where = "tasks[" + std::to_string(i) + "]";
    if (!tj.is_object()) throw ParseError(where + ": expected an object");
    Task t;
    const json& id = detail::require(tj, "id", where);
    if (!id.is_number_unsigned()) throw ParseError(where + ".id: expected a positive integer");
    t.id = id.get<std::size_t>();
    t.arrival = detail::require_number(tj, "arrival", where);
    t.deadline = detail::require_number(tj, "deadline", where);
    const json& bits = detail::require(tj, "bits", where);
    if (!bits.is_number_integer() || (bits.is_number_integer() && bits.get<std::int64_t>() < 0)) {
      throw ParseError(where + ".bits: expected a nonnegative integer");
    }
    t.bits = bits.get<std::uint64_t>();
    const json& energy = detail::require(tj, "energy", where);
    if (!energy.is_string()) throw ParseError(where + ".energy: expected a string");
    t.energy = energy.get<std::string>();
    if (tj.contains("tau_min")) t.tau_min = detail::require_number(tj, "tau_min", where);
    tasks.push_back(std::move(t));
  }
  std::string note;
  if (doc.contains("horizon_note") && doc["horizon_note"].is_string()) {
    note = doc["horizon_note"].get<std::string>();
  }
  return Instance(std::move(tasks), std::move(table), std::move(note));
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instance file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

inline void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write instance file '" + path + "'");
  out << instance_to_json(inst) << '\n';
  if (!out) throw ParameterError("failed writing instance file '" + path + "'");
}

}  // namespace dts
