#pragma once

// Distance-dependent magnetic parameters of the adatom, described by
// Gaussian-type fit functions f(a) = c0 + c1 exp(-(a - c2)^2 / (2 c3^2)).

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "adatom/error.hpp"
#include "adatom/units.hpp"

namespace adatom {

struct GaussianFit {
  double offset = 0.0;     // c0, value as a -> infinity
  double amplitude = 0.0;  // c1
  double center = 0.0;     // c2, Angstrom
  double width = 1.0;      // c3 > 0, Angstrom

  double value(double a) const { return offset + amplitude * bump(a); }

  double derivative(double a) const {
    return -amplitude * (a - center) / (width * width) * bump(a);
  }

  /// Minimum of the fit over [lo, hi], found analytically.
  double minimum_on(double lo, double hi) const {
    if (amplitude >= 0.0) {
      return std::min(value(lo), value(hi));
    }
    return value(std::clamp(center, lo, hi));
  }

 private:
  double bump(double a) const {
    const double x = (a - center) / width;
    return std::exp(-0.5 * x * x);
  }
};

/// How the fitted moments enter the Zeeman prefactor h = (g_S + g_L) muB B0.
enum class GNormalization {
  /// g_S + g_L = (mu_S + mu_L) / muB: the Zeeman energy is the moment times B0.
  moment,
  /// g_S + g_L = (mu_S + mu_L) / (J muB): the moment is read as g J muB.
  per_j,
};

inline std::string to_string(GNormalization g) {
  return g == GNormalization::moment ? "moment" : "per_j";
}

struct AnisotropyModel {
  GaussianFit delta_fit;       // meV
  GaussianFit mu_spin_fit;     // muB
  GaussianFit mu_orbital_fit;  // muB
  double b0_tesla = 4.0;
  GNormalization normalization = GNormalization::moment;
  double spin_j = 2.0;

  static constexpr double muB = units::bohr_magneton_meV_per_T;

  /// Combined dimensionless g_S(a) + g_L(a).
  double g_total(double a) const {
    const double mu = mu_spin_fit.value(a) + mu_orbital_fit.value(a);
    return normalization == GNormalization::moment ? mu : mu / spin_j;
  }

  double g_total_slope(double a) const {
    const double d = mu_spin_fit.derivative(a) + mu_orbital_fit.derivative(a);
    return normalization == GNormalization::moment ? d : d / spin_j;
  }
};

/// h(a) = [g_S(a) + g_L(a)] muB B0 in meV.
inline double zeeman_strength(const AnisotropyModel& model, double a) {
  return model.g_total(a) * AnisotropyModel::muB * model.b0_tesla;
}

inline double zeeman_slope(const AnisotropyModel& model, double a) {
  return model.g_total_slope(a) * AnisotropyModel::muB * model.b0_tesla;
}

struct AnisotropyValue {
  double delta;        // meV
  double delta_prime;  // meV / Angstrom
};

inline AnisotropyValue anisotropy_and_slope(const AnisotropyModel& model, double a) {
  return {model.delta_fit.value(a), model.delta_fit.derivative(a)};
}

/// Operating range over which delta(a) must stay positive (easy axis along z).
inline constexpr double operating_range_lo = 2.5;
inline constexpr double operating_range_hi = 6.0;

namespace detail {

inline double read_number(const boost::property_tree::ptree& tree, const std::string& path) {
  const auto node = tree.get_optional<std::string>(boost::property_tree::ptree::path_type(path, '/'));
  if (!node) throw ConfigError("missing required key '" + path + "'");
  try {
    std::size_t used = 0;
    const double v = std::stod(*node, &used);
    if (used != node->size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + path + "' is not a finite number: '" + *node + "'");
  }
}

inline GaussianFit read_fit(const boost::property_tree::ptree& tree, const std::string& section) {
  const auto child = tree.get_child_optional(boost::property_tree::ptree::path_type(section, '/'));
  if (!child) throw ConfigError("missing fit block '[" + section + "]'");
  static const std::set<std::string> allowed{"offset", "amplitude", "center", "width"};
  for (const auto& [key, value] : *child)
    if (!allowed.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
  GaussianFit fit;
  fit.offset = read_number(tree, section + "/offset");
  fit.amplitude = read_number(tree, section + "/amplitude");
  fit.center = read_number(tree, section + "/center");
  fit.width = read_number(tree, section + "/width");
  if (!(fit.width > 0.0))
    throw ConfigError("fit '" + section + "': '" + section + ".width' must be positive");
  return fit;
}

}  // namespace detail

/// Parses an INI document with sections [delta], [mu_spin], [mu_orbital]
/// (keys offset, amplitude, center, width) and optional top-level keys
/// B0_tesla (default 4) and g_normalization (moment | per_j).
inline AnisotropyModel load_model(std::istream& in, const std::string& source = "<config>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ": malformed document at line " + std::to_string(e.line()) + ": " +
                      e.message());
  }

  static const std::set<std::string> sections{"delta", "mu_spin", "mu_orbital"};
  static const std::set<std::string> top_level{"B0_tesla", "g_normalization"};
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      if (!top_level.count(key)) throw ConfigError(source + ": unknown top-level key '" + key + "'");
    } else if (!sections.count(key)) {
      throw ConfigError(source + ": unknown section '[" + key + "]'");
    }
  }

  AnisotropyModel model;
  try {
    model.delta_fit = detail::read_fit(tree, "delta");
    model.mu_spin_fit = detail::read_fit(tree, "mu_spin");
    model.mu_orbital_fit = detail::read_fit(tree, "mu_orbital");
    if (tree.get_optional<std::string>("B0_tesla")) model.b0_tesla = detail::read_number(tree, "B0_tesla");
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (model.b0_tesla < 0.0) throw ConfigError(source + ": 'B0_tesla' must be non-negative");

  if (const auto norm = tree.get_optional<std::string>("g_normalization")) {
    if (*norm == "moment") {
      model.normalization = GNormalization::moment;
    } else if (*norm == "per_j") {
      model.normalization = GNormalization::per_j;
    } else {
      throw ConfigError(source + ": 'g_normalization' must be 'moment' or 'per_j', got '" + *norm + "'");
    }
  }

  if (model.delta_fit.minimum_on(operating_range_lo, operating_range_hi) <= 0.0)
    throw ConfigError(source + ": fit 'delta' must stay positive on [2.5, 6] Angstrom");
  return model;
}

inline AnisotropyModel load_model_string(const std::string& text) {
  std::istringstream in(text);
  return load_model(in);
}

inline AnisotropyModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return load_model(in, path);
}

}  // namespace adatom
