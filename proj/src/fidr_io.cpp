#include "fidmag/fidr_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fidmag/errors.hpp"

namespace fidmag {
namespace {

static_assert(std::endian::native == std::endian::little,
              "FIDR I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'F', 'I', 'D', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  require(static_cast<bool>(is), ErrorKind::kIo, "truncated FIDR header in " + path.string());
  return v;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

void write_fidr(const std::filesystem::path& path, const PolarimeterRecord& rec) {
  require(rec.bit_depth > 0, ErrorKind::kValidation,
          "FIDR stores integer codes; float-mode records cannot be written");
  require(rec.codes.size() == rec.volts.size(), ErrorKind::kValidation,
          "record codes and samples disagree in length");
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::kIo, "cannot open " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kVersion);
  put<double>(os, rec.fs_hz);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(rec.bit_depth));
  put<double>(os, rec.scale_v_per_code);
  put<std::uint64_t>(os, rec.codes.size());
  put<std::uint64_t>(os, rec.segments.detector_only);
  put<std::uint64_t>(os, rec.segments.probe_on);
  put<std::uint64_t>(os, rec.segments.fid);
  if (rec.bit_depth <= 16) {
    std::vector<std::int16_t> buf(rec.codes.begin(), rec.codes.end());
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(std::int16_t)));
  } else {
    os.write(reinterpret_cast<const char*>(rec.codes.data()),
             static_cast<std::streamsize>(rec.codes.size() * sizeof(std::int32_t)));
  }
  require(static_cast<bool>(os), ErrorKind::kIo, "write failed for " + path.string());

  nlohmann::json meta = {
      {"format", "FIDR"},
      {"version", kVersion},
      {"fs_hz", rec.fs_hz},
      {"bit_depth", rec.bit_depth},
      {"scale_v_per_code", rec.scale_v_per_code},
      {"sample_count", rec.codes.size()},
      {"segments",
       {{"detector_only", rec.segments.detector_only},
        {"probe_on", rec.segments.probe_on},
        {"fid", rec.segments.fid}}},
      {"phi0_rad", rec.phi0_rad},
      {"a0_v", rec.meta.a0_v},
      {"lifetime_s", rec.meta.lifetime_s},
      {"sigma_v", rec.meta.sigma_v},
      {"detector_sigma_v", rec.meta.detector_sigma_v},
      {"full_scale_v", rec.meta.full_scale_v},
      {"clipped_samples", rec.meta.clipped_samples},
      {"clip_warning", rec.meta.clip_warning},
  };
  std::ofstream js(sidecar_path(path));
  require(static_cast<bool>(js), ErrorKind::kIo, "cannot write sidecar for " + path.string());
  js << meta.dump(2) << '\n';
}

PolarimeterRecord read_fidr(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::kIo, "cannot open " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  require(static_cast<bool>(is) && magic == kMagic, ErrorKind::kIo,
          path.string() + " is not a FIDR file");
  const auto version = get<std::uint32_t>(is, path);
  require(version == kVersion, ErrorKind::kIo,
          "unsupported FIDR version " + std::to_string(version));
  PolarimeterRecord rec;
  rec.fs_hz = get<double>(is, path);
  rec.bit_depth = static_cast<int>(get<std::uint32_t>(is, path));
  rec.scale_v_per_code = get<double>(is, path);
  const auto count = get<std::uint64_t>(is, path);
  rec.segments.detector_only = get<std::uint64_t>(is, path);
  rec.segments.probe_on = get<std::uint64_t>(is, path);
  rec.segments.fid = get<std::uint64_t>(is, path);
  require(rec.bit_depth >= 2 && rec.bit_depth <= 32 && rec.fs_hz > 0.0, ErrorKind::kIo,
          "corrupt FIDR header in " + path.string());
  require(rec.segments.detector_only <= rec.segments.probe_on &&
              rec.segments.probe_on <= rec.segments.fid && rec.segments.fid <= count,
          ErrorKind::kIo, "FIDR segment markers out of order in " + path.string());

  rec.codes.resize(count);
  if (rec.bit_depth <= 16) {
    std::vector<std::int16_t> buf(count);
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(count * sizeof(std::int16_t)));
    std::copy(buf.begin(), buf.end(), rec.codes.begin());
  } else {
    is.read(reinterpret_cast<char*>(rec.codes.data()),
            static_cast<std::streamsize>(count * sizeof(std::int32_t)));
  }
  require(static_cast<bool>(is), ErrorKind::kIo, "truncated FIDR payload in " + path.string());
  rec.volts.resize(count);
  for (std::size_t i = 0; i < count; ++i) rec.volts[i] = rec.codes[i] * rec.scale_v_per_code;

  std::ifstream js(sidecar_path(path));
  if (js) {
    try {
      const auto meta = nlohmann::json::parse(js);
      rec.phi0_rad = meta.value("phi0_rad", 0.0);
      rec.meta.a0_v = meta.value("a0_v", 0.0);
      rec.meta.lifetime_s = meta.value("lifetime_s", 0.0);
      rec.meta.sigma_v = meta.value("sigma_v", 0.0);
      rec.meta.detector_sigma_v = meta.value("detector_sigma_v", 0.0);
      rec.meta.full_scale_v = meta.value("full_scale_v", 0.0);
      rec.meta.clipped_samples = meta.value("clipped_samples", std::size_t{0});
      rec.meta.clip_warning = meta.value("clip_warning", false);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kIo, "malformed sidecar for " + path.string() + ": " + e.what());
    }
  }
  return rec;
}

void write_record_csv(const std::filesystem::path& path, const PolarimeterRecord& rec) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorKind::kIo, "cannot open " + path.string());
  os << "t_s,v\n";
  os.precision(12);
  for (std::size_t i = 0; i < rec.volts.size(); ++i) {
    os << static_cast<double>(i) / rec.fs_hz << ',' << rec.volts[i] << '\n';
  }
}

}  // namespace fidmag
