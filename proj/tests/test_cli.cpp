#include <doctest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(FIDMAG_SOURCE_DIR) / "configs";

struct Workdir {
  fs::path path = fs::temp_directory_path() / "fidmag_cli_test";
  Workdir() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Workdir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI with stdout and stderr sent to files in `w`; returns the exit code.
int run(const Workdir& w, const std::string& args) {
  const std::string cmd = std::string("'") + FIDMAG_CLI + "' " + args + " >'" +
                          (w / "stdout").string() + "' 2>'" + (w / "stderr").string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// CSV text without the (timing-dependent) runtime_s column.
std::string without_runtime(const std::string& csv) {
  std::istringstream in(csv);
  std::string out, line;
  std::size_t skip = std::string::npos;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (skip == std::string::npos) skip = std::find(cells.begin(), cells.end(), "runtime_s") - cells.begin();
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (i != skip) out += cells[i] + ',';
    out += '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("physics table") {
  Workdir w;
  REQUIRE(run(w, "physics --b 0 --b 86.0121261e-6 --out " + (w / "t.csv").string()) == 0);
  std::istringstream csv(slurp(w / "t.csv"));
  std::string header, zero, lab;
  std::getline(csv, header);
  std::getline(csv, zero);
  std::getline(csv, lab);
  CHECK(header == "b_t,omega_over_2pi_hz,q_over_2pi_hz,gamma_over_2pi_hz_per_t");
  double b, w_hz, q_hz, g;
  char c;
  std::istringstream(zero) >> b >> c >> w_hz >> c >> q_hz >> c >> g;
  CHECK(w_hz == 0.0);
  CHECK(q_hz == 0.0);
  CHECK(g == doctest::Approx(7.02369e9).epsilon(1e-6));
  std::istringstream(lab) >> b >> c >> w_hz >> c >> q_hz >> c >> g;
  CHECK(w_hz == doctest::Approx(604.1e3).epsilon(1e-4));
}

TEST_CASE("simulate, reconstruct, estimate, spectra") {
  Workdir w;
  const auto shot = (w / "shot.fidr").string();
  REQUIRE(run(w, "simulate --config " + (kConfigs / "desk_single_shot.yaml").string() +
                     " --out " + shot) == 0);
  CHECK(fs::exists(shot));
  const auto side = nlohmann::json::parse(slurp(w / "shot.fidr.json"));
  CHECK(side.contains("scenario_yaml"));
  CHECK(side.at("base_seed") == 7);

  REQUIRE(run(w, "reconstruct --in " + shot + " --band 500 --out " + (w / "phase.csv").string()) == 0);
  CHECK(fs::file_size(w / "phase.csv") > 1000);

  REQUIRE(run(w, "estimate --in " + shot + " --band 500 --with-residuals --out " + (w / "est.json").string()) == 0);
  const auto est = nlohmann::json::parse(slurp(w / "est.json"));
  for (const char* k : {"B_est", "phi_est", "sigma_omega", "delta_B_dc", "delta_phi",
                        "weighted_mean_snr", "residuals"})
    CHECK_MESSAGE(est.contains(k), std::string(k));
  CHECK(est.at("B_est").get<double>() == doctest::Approx(8.5425e-6).epsilon(1e-6));
  CHECK(est.contains("options"));

  REQUIRE(run(w, "spectra --in " + shot + " --out " + (w / "sp").string()) == 0);
  CHECK(fs::exists(w / "sp" / "record_psd.csv"));
  CHECK(fs::exists(w / "sp" / "snr.csv"));
}

TEST_CASE("mc requires a seed and replays rows") {
  Workdir w;
  {
    std::ofstream cfg(w / "noseed.yaml");
    cfg << "name: noseed\nexperiment: fringe_hop\ntrials: 10\nfield:\n  b0_t: 86e-6\n"
           "  white_asd_t_rthz: 100e-12\n";
  }
  CHECK(run(w, "mc --config " + (w / "noseed.yaml").string() + " --out " + (w / "o").string()) == 2);
  const auto err = nlohmann::json::parse(slurp(w / "stderr"));
  CHECK(err.at("exit_code") == 2);
  CHECK(err.contains("message"));

  REQUIRE(run(w, "mc --config " + (w / "noseed.yaml").string() + " --seed 5 --out " +
                     (w / "o").string()) == 0);
  CHECK(fs::exists(w / "o" / "report.csv"));
  CHECK(fs::exists(w / "o" / "report.json"));
  CHECK(fs::exists(w / "o" / "scenario.yaml"));
  std::istringstream csv(slurp(w / "o" / "report.csv"));
  std::string header, row;
  std::getline(csv, header);
  std::size_t rows = 0;
  for (std::string l; std::getline(csv, l);)
    if (rows++ == 3) row = l;
  CHECK(rows == 50);  // 10 trials x 5 tau points

  // the echoed scenario re-runs to the same report
  REQUIRE(run(w, "mc --config " + (w / "o" / "scenario.yaml").string() + " --out " +
                     (w / "o2").string()) == 0);
  CHECK(without_runtime(slurp(w / "o2" / "report.csv")) == without_runtime(slurp(w / "o" / "report.csv")));
}

TEST_CASE("exit codes") {
  Workdir w;
  {
    std::ofstream cfg(w / "bad.yaml");
    cfg << "name: bad\nrecord:\n  sample_rate: 5\n";
  }
  CHECK(run(w, "simulate --config " + (w / "bad.yaml").string() + " --out " +
                   (w / "x.fidr").string()) == 2);
  CHECK(run(w, "estimate --in " + (w / "missing.fidr").string() + " --out " +
                   (w / "e.json").string()) == 2);
  CHECK(run(w, "physics --b 2") == 2);  // beyond the field guard
  CHECK(run(w, "nonsense") != 0);

  // an over-wide band on a low-SNR record cannot be unwrapped: estimation error
  {
    std::ofstream cfg(w / "low.yaml");
    cfg << slurp(kConfigs / "desk_single_shot.yaml") << "\n";
  }
  const auto shot = (w / "low.fidr").string();
  REQUIRE(run(w, "simulate --config " + (w / "low.yaml").string() + " --out " + shot) == 0);
  CHECK(run(w, "estimate --in " + shot + " --band 50000 --out " + (w / "e.json").string()) == 3);
  const auto err = nlohmann::json::parse(slurp(w / "stderr"));
  CHECK(err.at("exit_code") == 3);
}
