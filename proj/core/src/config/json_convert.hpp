#pragma once

#include <string>

#include "adexsbi/dataset/record.hpp"
#include "common/json_io.hpp"

namespace adexsbi {

inline json calibration_to_json(const hw::CalibrationTable& table) {
  json j = json::object();
  for (std::size_t i = 0; i < hw::kNumFree; ++i) {
    const auto& r = table.ranges[i];
    j[std::string(hw::kParamNames[i])] = {{"min", r.physical_min},
                                          {"max", r.physical_max},
                                          {"map", r.kind == hw::MapKind::kLog ? "log" : "affine"}};
  }
  return j;
}

inline hw::CalibrationTable calibration_from_json(const json& j) {
  hw::CalibrationTable table;
  for (std::size_t i = 0; i < hw::kNumFree; ++i) {
    const json& e = j.at(std::string(hw::kParamNames[i]));
    auto& r = table.ranges[i];
    r.physical_min = e.at("min").get<double>();
    r.physical_max = e.at("max").get<double>();
    const std::string map = e.value("map", "affine");
    if (map == "log") {
      r.kind = hw::MapKind::kLog;
    } else if (map == "affine") {
      r.kind = hw::MapKind::kAffine;
    } else {
      throw std::invalid_argument("calibration: unknown map '" + map + "'");
    }
  }
  table.validate();
  return table;
}

inline json fixed_to_json(const hw::FixedParams& f) {
  return {{"c_m", f.c_m}, {"v_l", f.v_l}, {"v_th", f.v_th}, {"tau_ref", f.tau_ref}, {"i_max", f.i_max}, {"c_w", f.c_w}};
}

inline hw::FixedParams fixed_from_json(const json& j) {
  hw::FixedParams f;
  f.c_m = j.at("c_m").get<double>();
  f.v_l = j.at("v_l").get<double>();
  f.v_th = j.at("v_th").get<double>();
  f.tau_ref = j.at("tau_ref").get<double>();
  f.i_max = j.at("i_max").get<double>();
  f.c_w = j.at("c_w").get<double>();
  return f;
}

inline json simulation_to_json(const dataset::SimulationConfig& c) {
  return {{"calibration", calibration_to_json(c.table)},
          {"fixed", fixed_to_json(c.fixed)},
          {"stimulus", {{"onset", c.onset}, {"duration", c.duration}, {"experiment_length", c.experiment_length}}},
          {"dt", c.dt},
          {"noise_sigma", c.noise_sigma},
          {"features", {{"fast_trough_fraction", c.feature_options.fast_trough_fraction}}}};
}

inline dataset::SimulationConfig simulation_from_json(const json& j) {
  dataset::SimulationConfig c;
  c.table = calibration_from_json(j.at("calibration"));
  c.fixed = fixed_from_json(j.at("fixed"));
  const json& s = j.at("stimulus");
  c.onset = s.at("onset").get<double>();
  c.duration = s.at("duration").get<double>();
  c.experiment_length = s.at("experiment_length").get<double>();
  c.dt = j.at("dt").get<double>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  if (j.contains("features")) {
    c.feature_options.fast_trough_fraction = j.at("features").value("fast_trough_fraction", 0.1);
  }
  return c;
}

}  // namespace adexsbi
