#pragma once

#include <filesystem>
#include <string>

namespace fidmag {

/// Ground-state Zeeman constants, SI units throughout. gamma0/q0/c0 are
/// angular (rad/s per T^n); gamma0 is stored as a positive magnitude.
struct AtomicSpecies {
  std::string name;
  double nuclear_spin = 0.0;
  double g_j = 0.0;
  double g_i = 0.0;
  double e_hfs = 0.0;   // J
  double mu_b = 0.0;    // J/T
  double hbar = 0.0;    // J s
  double gamma0 = 0.0;  // rad s^-1 T^-1
  double q0 = 0.0;      // rad s^-1 T^-2
  double c0 = 0.0;      // rad s^-1 T^-3
};

/// Built-in Rb-87 table (same numbers as data/species/rb87.yaml).
const AtomicSpecies& rubidium87();

/// Low-field coefficients recomputed from g_J, g_I, E_hfs, I.
double derived_gamma0(const AtomicSpecies& s);
double derived_q0(const AtomicSpecies& s);
double derived_c0(const AtomicSpecies& s);

/// Throws kValidation if a field is non-physical or the stored series
/// coefficients disagree with the derived ones (gamma0 to 6 significant
/// figures, q0 and c0 to 1e-4).
void validate(const AtomicSpecies& s);

/// Loads a versioned species file (YAML, format_version 1) and validates it.
AtomicSpecies load_species(const std::filesystem::path& path);

/// Default location of the shipped constants files.
std::filesystem::path default_species_dir();

}  // namespace fidmag
