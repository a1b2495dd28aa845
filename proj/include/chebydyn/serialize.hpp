#pragma once

#include <nlohmann/json.hpp>

#include "density.hpp"
#include "spectral.hpp"

namespace chebydyn {

inline nlohmann::json to_json(const StepDensity& rho) {
  nlohmann::json points = nlohmann::json::array(), values = nlohmann::json::array();
  for (const Rational& p : rho.partition().points) points.push_back(to_string(p));
  for (const Rational& v : rho.values()) values.push_back(to_string(v));
  return {{"points", points}, {"values", values}};
}

inline StepDensity step_density_from_json(const nlohmann::json& j) {
  MarkovPartition partition;
  std::vector<Rational> values;
  for (const auto& p : j.at("points")) partition.points.push_back(parse_rational(p.get<std::string>()));
  for (const auto& v : j.at("values")) values.push_back(parse_rational(v.get<std::string>()));
  return StepDensity(std::move(partition), std::move(values));
}

inline nlohmann::json to_json(const std::vector<Plateau>& plateaus) {
  nlohmann::json out = nlohmann::json::array();
  for (const Plateau& p : plateaus)
    out.push_back({{"lower", to_string(p.lower)}, {"upper", to_string(p.upper)}, {"value", to_string(p.value)}});
  return out;
}

inline nlohmann::json to_json(const EigenPair& pair) {
  const EigenDescriptor& d = pair.descriptor();
  return {{"kind", to_string(d.kind)},
          {"n", pair.n()},
          {"degree", d.degree},
          {"lambda", to_string(pair.lambda())},
          {"inner", {{"arccos_sign", d.arccos_sign}, {"scale", to_string(d.scale)}, {"shift", to_string(d.shift)}}}};
}

}  // namespace chebydyn
