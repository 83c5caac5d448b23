#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fidmag/errors.hpp"
#include "fidmag/physics.hpp"
#include "fidmag/species.hpp"

using namespace fidmag;

namespace {

// Low-field slopes straight from the Breit-Rabi energies, no closed forms.
double numeric_gamma0(const AtomicSpecies& s) {
  const double b = 1e-7;
  return (breit_rabi_energy(s, 1, -1, b) - breit_rabi_energy(s, 1, 1, b)) / (2.0 * s.hbar * b);
}

double numeric_q0(const AtomicSpecies& s) {
  const double b = 2e-6;
  const double e = breit_rabi_energy(s, 1, -1, b) + breit_rabi_energy(s, 1, 1, b) -
                   2.0 * breit_rabi_energy(s, 1, 0, b);
  return e / (2.0 * s.hbar * b * b);
}

}  // namespace

TEST_CASE("stored Rb-87 coefficients match the quoted reference values") {
  const auto& s = rubidium87();
  CHECK(s.gamma0 / kTwoPi == doctest::Approx(7.02369e9).epsilon(1e-9));
  CHECK(s.q0 / kTwoPi == doctest::Approx(7.189e9).epsilon(1e-9));
  CHECK(s.c0 / kTwoPi == doctest::Approx(44.24e9).epsilon(1e-9));
  CHECK(s.nuclear_spin == 1.5);
}

TEST_CASE("closed-form coefficients agree with numerically differentiated energies") {
  const auto& s = rubidium87();
  CHECK(derived_gamma0(s) == doctest::Approx(numeric_gamma0(s)).epsilon(1e-7));
  CHECK(derived_q0(s) == doctest::Approx(numeric_q0(s)).epsilon(1e-4));
  CHECK(derived_gamma0(s) == doctest::Approx(s.gamma0).epsilon(5e-7));
  CHECK(derived_q0(s) == doctest::Approx(s.q0).epsilon(1e-4));
  CHECK(derived_c0(s) == doctest::Approx(s.c0).epsilon(1e-4));
}

TEST_CASE("cubic coefficient reproduces the departure from linear Zeeman at 1 mT") {
  const auto& s = rubidium87();
  const double b = 1e-3;
  const double dev = derived_gamma0(s) * b - larmor_frequency(s, b);
  CHECK(dev == doctest::Approx(s.c0 * b * b * b).epsilon(0.01));
}

TEST_CASE("shipped species file equals the compiled-in constants") {
  const auto s = load_species(default_species_dir() / "rb87.yaml");
  const auto& r = rubidium87();
  CHECK(s.name == r.name);
  CHECK(s.g_j == r.g_j);
  CHECK(s.g_i == r.g_i);
  CHECK(s.e_hfs == doctest::Approx(r.e_hfs).epsilon(1e-15));
  CHECK(s.gamma0 == doctest::Approx(r.gamma0).epsilon(1e-15));
  CHECK(s.q0 == doctest::Approx(r.q0).epsilon(1e-15));
}

TEST_CASE("species loading errors") {
  CHECK_THROWS_AS(load_species("/nonexistent/species.yaml"), Error);
  const auto path = std::filesystem::temp_directory_path() / "fidmag_bad_species.yaml";
  {
    std::ifstream in(default_species_dir() / "rb87.yaml");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto pos = text.find("gamma0_hz_per_t");
    REQUIRE(pos != std::string::npos);
    const auto eol = text.find('\n', pos);
    text.replace(pos, eol - pos, "gamma0_hz_per_t: 7.1e9");
    std::ofstream out(path);
    out << text;
  }
  try {
    load_species(path);
    FAIL("inconsistent gamma0 accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
  }
  std::filesystem::remove(path);
}
