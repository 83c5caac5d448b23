#include "fidmag/species.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <numbers>

#include "fidmag/errors.hpp"

namespace fidmag {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPlanck = 6.62607015e-34;

AtomicSpecies make_rb87() {
  AtomicSpecies s;
  s.name = "Rb87";
  s.nuclear_spin = 1.5;
  s.g_j = 2.00233113;
  s.g_i = -0.0009951414;
  s.e_hfs = kPlanck * 6834682610.904290;
  s.mu_b = 9.2740100783e-24;
  s.hbar = kPlanck / kTwoPi;
  s.gamma0 = kTwoPi * 7.02369e9;
  s.q0 = kTwoPi * 7.189e9;
  s.c0 = kTwoPi * 44.24e9;
  return s;
}

bool close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::abs(b);
}

double required(const YAML::Node& root, const char* key) {
  const auto node = root[key];
  require(static_cast<bool>(node), ErrorKind::kValidation,
          std::string("species file: missing key '") + key + "'");
  try {
    return node.as<double>();
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::kValidation,
         std::string("species file: key '") + key + "' is not a number");
  }
}

}  // namespace

const AtomicSpecies& rubidium87() {
  static const AtomicSpecies s = make_rb87();
  return s;
}

double derived_gamma0(const AtomicSpecies& s) {
  const double n = 2.0 * s.nuclear_spin + 1.0;
  return s.mu_b * ((s.g_j - s.g_i) / n - s.g_i) / s.hbar;
}

double derived_q0(const AtomicSpecies& s) {
  // x^2 term of (E_{1,+1}+E_{1,-1}-2E_{1,0})/2hbar.
  const double n = 2.0 * s.nuclear_spin + 1.0;
  const double k = (s.g_j - s.g_i) * s.mu_b / s.e_hfs;
  return s.e_hfs * k * k / (n * n) / s.hbar;
}

double derived_c0(const AtomicSpecies& s) {
  // x^3 term of (E_{1,-1}-E_{1,+1})/2hbar, entering as omega = gamma0 B - c0 B^3.
  const double n = 2.0 * s.nuclear_spin + 1.0;
  const double k = (s.g_j - s.g_i) * s.mu_b / s.e_hfs;
  return s.e_hfs * k * k * k * (1.0 - 4.0 / (n * n)) / (2.0 * n * s.hbar);
}

void validate(const AtomicSpecies& s) {
  require(s.e_hfs > 0.0, ErrorKind::kValidation, "species: E_hfs must be > 0");
  require(s.mu_b > 0.0, ErrorKind::kValidation, "species: mu_B must be > 0");
  require(s.hbar > 0.0, ErrorKind::kValidation, "species: hbar must be > 0");
  require(s.nuclear_spin > 0.0, ErrorKind::kValidation,
          "species: nuclear spin must be > 0");
  require(s.gamma0 > 0.0, ErrorKind::kValidation,
          "species: gamma0 is stored as a positive magnitude");
  require(close(s.gamma0, derived_gamma0(s), 5e-7), ErrorKind::kValidation,
          "species: stored gamma0 disagrees with g-factors beyond 6 s.f.");
  require(close(s.q0, derived_q0(s), 1e-4), ErrorKind::kValidation,
          "species: stored q0 disagrees with derived value");
  require(close(s.c0, derived_c0(s), 1e-4), ErrorKind::kValidation,
          "species: stored c0 disagrees with derived value");
}

AtomicSpecies load_species(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::kIo, "cannot read species file " + path.string() + ": " +
                             e.what());
  }
  const auto version = static_cast<int>(required(root, "format_version"));
  require(version == 1, ErrorKind::kValidation,
          "species file: unsupported format_version " + std::to_string(version));
  AtomicSpecies s;
  s.name = root["name"] ? root["name"].as<std::string>() : path.stem().string();
  s.nuclear_spin = required(root, "nuclear_spin");
  s.g_j = required(root, "g_j");
  s.g_i = required(root, "g_i");
  const double planck = required(root, "planck_j_s");
  s.e_hfs = planck * required(root, "hfs_splitting_hz");
  s.mu_b = required(root, "bohr_magneton_j_per_t");
  s.hbar = planck / kTwoPi;
  s.gamma0 = kTwoPi * required(root, "gamma0_hz_per_t");
  s.q0 = kTwoPi * required(root, "q0_hz_per_t2");
  s.c0 = kTwoPi * required(root, "c0_hz_per_t3");
  validate(s);
  return s;
}

std::filesystem::path default_species_dir() {
  return std::filesystem::path(FIDMAG_DATA_DIR) / "species";
}

}  // namespace fidmag
