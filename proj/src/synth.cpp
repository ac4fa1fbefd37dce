#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "facelap/dataset.hpp"
#include "facelap/parallel.hpp"

namespace facelap {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Base head: ellipsoid semi-axes (mm), face towards +z.
constexpr double kAxisX = 80.0, kAxisY = 105.0, kAxisZ = 95.0;
constexpr double kThetaMin = -65.0, kThetaMax = 65.0;  // azimuth, degrees
constexpr double kPhiMin = -60.0, kPhiMax = 55.0;      // elevation, degrees

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  return splitmix(splitmix(splitmix(seed ^ splitmix(a)) ^ b) ^ c);
}

// Distributions are written out so that streams match across standard libraries.
struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t s) : engine(s) {}
  double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
};

struct LandmarkSite {
  std::string label;
  double theta, phi;  // degrees
};

std::vector<LandmarkSite> landmark_sites() {
  std::vector<LandmarkSite> out;
  const char* side[2] = {"r", "l"};
  for (int s = 0; s < 2; ++s) {
    const double sign = s == 0 ? -1.0 : 1.0;
    const double th[5] = {40, 32, 24, 16, 8};
    const double ph[5] = {22, 25, 26, 25, 22};
    for (int i = 0; i < 5; ++i)
      out.push_back({std::string("brow_") + side[s] + std::to_string(i), sign * th[i], ph[i]});
  }
  for (int s = 0; s < 2; ++s) {
    const double sign = s == 0 ? -1.0 : 1.0;
    for (int i = 0; i < 8; ++i) {
      const double a = i * 45.0 * kDeg;
      out.push_back({std::string("eye_") + side[s] + std::to_string(i), sign * (20.0 + 7.0 * std::cos(a)),
                     13.0 + 3.0 * std::sin(a)});
    }
  }
  const double bridge[4] = {10, 5, 0, -5};
  for (int i = 0; i < 4; ++i) out.push_back({"nose_bridge" + std::to_string(i), 0.0, bridge[i]});
  out.push_back({"nose_tip", 0.0, -9.0});
  const double base_t[7] = {-10, -6.5, -3.5, 0, 3.5, 6.5, 10};
  const double base_p[7] = {-12, -13, -14, -15, -14, -13, -12};
  for (int i = 0; i < 7; ++i) out.push_back({"nose_base" + std::to_string(i), base_t[i], base_p[i]});
  for (int i = 0; i < 12; ++i) {
    const double a = i * 30.0 * kDeg;
    out.push_back({"mouth_outer" + std::to_string(i), 14.0 * std::cos(a), -28.0 + 5.0 * std::sin(a)});
  }
  for (int i = 0; i < 8; ++i) {
    const double a = i * 45.0 * kDeg;
    out.push_back({"mouth_inner" + std::to_string(i), 8.0 * std::cos(a), -28.0 + 2.0 * std::sin(a)});
  }
  out.push_back({"chin", 0.0, -45.0});
  out.push_back({"chin_r", -10.0, -42.0});
  out.push_back({"chin_l", 10.0, -42.0});
  out.push_back({"cheek_r0", -30.0, -10.0});
  out.push_back({"cheek_l0", 30.0, -10.0});
  out.push_back({"cheek_r1", -32.0, -25.0});
  out.push_back({"cheek_l1", 32.0, -25.0});
  out.push_back({"forehead", 0.0, 38.0});
  out.push_back({"forehead_r", -15.0, 37.0});
  out.push_back({"forehead_l", 15.0, 37.0});
  return out;
}

// Localized normal displacement of one Action Unit. Bilateral fields are
// mirrored about the midline.
struct AuField {
  int au;
  double theta, phi;  // degrees
  double sign;
  double sigma_scale;
  bool bilateral;
};

constexpr AuField kAuFields[] = {
    {1, 8, 27, +1, 1.0, true},      // inner brow raiser
    {2, 30, 26, +1, 1.0, true},     // outer brow raiser
    {4, 12, 21, -1, 1.0, true},     // brow lowerer
    {5, 20, 16, +1, 0.8, true},     // upper lid raiser
    {6, 25, 0, +1, 1.2, true},      // cheek raiser
    {7, 20, 9, +1, 0.8, true},      // lid tightener
    {9, 6, 5, +1, 0.8, true},       // nose wrinkler
    {10, 0, -20, +1, 1.0, false},   // upper lip raiser
    {12, 18, -24, -1, 1.0, true},   // lip corner puller
    {15, 16, -32, +1, 1.0, true},   // lip corner depressor
    {16, 0, -34, -1, 1.0, false},   // lower lip depressor
    {17, 0, -42, +1, 1.0, false},   // chin raiser
    {20, 20, -28, -1, 1.0, true},   // lip stretcher
    {23, 0, -28, -1, 0.7, false},   // lip tightener
    {24, 0, -27, +1, 0.7, false},   // lip pressor
    {25, 0, -28, -1, 1.0, false},   // lips part
    {26, 0, -37, -1, 1.3, false},   // jaw drop
};

AuMask mask_of(std::initializer_list<int> aus) {
  AuMask m = 0;
  for (int a : aus) m |= AuMask{1} << *action_unit_slot(a);
  return m;
}

struct Identity {
  double scale[3];
  struct Wave {
    double amp, ft, fp, phase;
  } waves[3];
  std::vector<std::pair<double, double>> jitter;  // landmark (dtheta, dphi), degrees
};

Identity make_identity(const SynthConfig& cfg, std::size_t subject) {
  Rng rng(derive(cfg.seed, subject, 0x1d));
  Identity id;
  const double v = cfg.subject_variation;
  for (double& s : id.scale) s = 1.0 + v * rng.uniform(-0.05, 0.05);
  for (auto& w : id.waves) {
    w.amp = v * rng.uniform(0.5, 1.5);
    w.ft = rng.uniform(1.0, 3.0);
    w.fp = rng.uniform(1.0, 3.0);
    w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  id.jitter.resize(kSynthLandmarks);
  for (auto& j : id.jitter) j = {v * rng.uniform(-1.5, 1.5), v * rng.uniform(-1.5, 1.5)};
  return id;
}

struct Bump {
  Vec3 center;
  double amp;
  double sigma;
};

class FaceSurface {
 public:
  FaceSurface(const Identity& id, std::vector<Bump> bumps) : id_(id), bumps_(std::move(bumps)) {}

  Vec3 ellipsoid(double theta, double phi) const {
    return {id_.scale[0] * kAxisX * std::sin(theta) * std::cos(phi), id_.scale[1] * kAxisY * std::sin(phi),
            id_.scale[2] * kAxisZ * std::cos(theta) * std::cos(phi)};
  }

  Vec3 point(double theta, double phi) const {
    const Vec3 e = ellipsoid(theta, phi);
    const double ax = id_.scale[0] * kAxisX, ay = id_.scale[1] * kAxisY, az = id_.scale[2] * kAxisZ;
    const Vec3 n = normalized({e.x / (ax * ax), e.y / (ay * ay), e.z / (az * az)});
    double h = 0.0;
    for (const auto& w : id_.waves) h += w.amp * std::sin(w.ft * theta + w.fp * phi + w.phase);
    h += feature(e, ellipsoid(0.0, -4.0 * kDeg), 11.0, 8.0, 16.0);   // nose
    h += feature(e, ellipsoid(-20.0 * kDeg, 13.0 * kDeg), -3.0, 9.0, 7.0);  // eye sockets
    h += feature(e, ellipsoid(20.0 * kDeg, 13.0 * kDeg), -3.0, 9.0, 7.0);
    h += feature(e, ellipsoid(0.0, -28.0 * kDeg), 2.0, 14.0, 5.0);  // lips
    for (const Bump& b : bumps_) {
      const Vec3 d = e - b.center;
      h += b.amp * std::exp(-dot(d, d) / (2.0 * b.sigma * b.sigma));
    }
    return e + n * h;
  }

 private:
  static double feature(const Vec3& e, const Vec3& c, double amp, double sx, double sy) {
    const double dx = e.x - c.x, dy = e.y - c.y;
    return amp * std::exp(-0.5 * (dx * dx / (sx * sx) + dy * dy / (sy * sy)));
  }

  const Identity& id_;
  std::vector<Bump> bumps_;
};

SynthScan render(const SynthConfig& cfg, std::size_t subject, int expression, int level) {
  const Identity id = make_identity(cfg, subject);
  SynthScan scan;
  scan.subject = synth_subject_id(subject);
  scan.expression = expression;
  scan.intensity = level;

  std::vector<Bump> bumps;
  if (expression >= 0) {
    // Amplitudes and dropped AUs depend on (subject, expression) only, so
    // level 2 is exactly twice level 1.
    Rng rng(derive(cfg.seed, subject, 0xe0 + static_cast<std::uint64_t>(expression)));
    const AuMask set = expression_aus(expression);
    const int core = expression_core_au(expression);
    FaceSurface base(id, {});
    for (const AuField& f : kAuFields) {
      const AuMask bit = AuMask{1} << *action_unit_slot(f.au);
      if (!(set & bit)) continue;
      const double amp = rng.uniform(cfg.amplitude_min, cfg.amplitude_max);
      const double drop = rng.uniform();
      if (f.au != core && drop < cfg.dropout) continue;
      scan.aus |= bit;
      const double a = f.sign * amp * level;
      const double sigma = cfg.bump_sigma * f.sigma_scale;
      bumps.push_back({base.ellipsoid(f.theta * kDeg, f.phi * kDeg), a, sigma});
      if (f.bilateral) bumps.push_back({base.ellipsoid(-f.theta * kDeg, f.phi * kDeg), a, sigma});
    }
  }
  const FaceSurface surface(id, std::move(bumps));

  const double span_t = (kThetaMax - kThetaMin) * kDeg, span_p = (kPhiMax - kPhiMin) * kDeg;
  const std::size_t nt = static_cast<std::size_t>(std::lround(span_t * kAxisX / cfg.resolution)) + 1;
  const std::size_t np = static_cast<std::size_t>(std::lround(span_p * 0.5 * (kAxisY + kAxisZ) / cfg.resolution)) + 1;
  std::vector<Vec3> verts;
  verts.reserve(nt * np);
  for (std::size_t j = 0; j < np; ++j) {
    const double phi = kPhiMin * kDeg + span_p * static_cast<double>(j) / static_cast<double>(np - 1);
    for (std::size_t i = 0; i < nt; ++i) {
      const double theta = kThetaMin * kDeg + span_t * static_cast<double>(i) / static_cast<double>(nt - 1);
      verts.push_back(surface.point(theta, phi));
    }
  }
  if (cfg.vertex_jitter > 0.0) {
    Rng rng(derive(cfg.seed, subject, 0x7a + static_cast<std::uint64_t>(expression + 1), static_cast<std::uint64_t>(level)));
    for (Vec3& v : verts)
      for (int c = 0; c < 3; ++c) v[c] += cfg.vertex_jitter * rng.normal();
  }
  std::vector<Face> faces;
  faces.reserve(2 * (nt - 1) * (np - 1));
  auto at = [nt](std::size_t i, std::size_t j) { return static_cast<std::uint32_t>(j * nt + i); };
  for (std::size_t j = 0; j + 1 < np; ++j)
    for (std::size_t i = 0; i + 1 < nt; ++i) {
      faces.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
      faces.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
    }
  scan.mesh = TriangleMesh(std::move(verts), std::move(faces));

  const auto sites = landmark_sites();
  std::vector<Landmark> lms;
  for (std::size_t l = 0; l < sites.size(); ++l) {
    const double t = (sites[l].theta + id.jitter[l].first) * kDeg;
    const double p = (sites[l].phi + id.jitter[l].second) * kDeg;
    lms.push_back({sites[l].label, surface.point(t, p)});
  }
  scan.landmarks = LandmarkSet(std::move(lms));
  return scan;
}

}  // namespace

void SynthConfig::validate() const {
  if (subjects == 0) throw std::invalid_argument("synth: subjects must be positive");
  if (expressions.empty()) throw std::invalid_argument("synth: no expressions selected");
  for (int e : expressions)
    if (e < 0 || e >= static_cast<int>(kExpressionCodes.size()))
      throw std::invalid_argument("synth: expression index out of range");
  if (levels.empty()) throw std::invalid_argument("synth: no intensity levels selected");
  for (int l : levels)
    if (l < 1 || l > kMaxIntensity) throw std::invalid_argument("synth: intensity levels must be in 1..4");
  if (!(resolution > 0.2 && resolution <= 10.0)) throw std::invalid_argument("synth: resolution must be in (0.2, 10] mm");
  if (!(amplitude_min > 0.0) || !(amplitude_max >= amplitude_min))
    throw std::invalid_argument("synth: amplitudes must be positive with min <= max");
  if (!(bump_sigma > 0.0)) throw std::invalid_argument("synth: bump sigma must be positive");
  if (!(subject_variation >= 0.0)) throw std::invalid_argument("synth: subject variation must be non-negative");
  if (!(dropout >= 0.0 && dropout <= 1.0)) throw std::invalid_argument("synth: dropout must be in [0, 1]");
  if (!(vertex_jitter >= 0.0)) throw std::invalid_argument("synth: vertex jitter must be non-negative");
}

std::vector<std::string> synth_landmark_labels() {
  std::vector<std::string> out;
  for (const auto& s : landmark_sites()) out.push_back(s.label);
  return out;
}

AuMask expression_aus(int expression) {
  switch (expression) {
    case 0: return mask_of({4, 5, 7, 23});          // AN
    case 1: return mask_of({9, 10, 15, 16});        // DI
    case 2: return mask_of({1, 2, 4, 5, 20, 25});   // FE
    case 3: return mask_of({6, 12, 25});            // HA
    case 4: return mask_of({1, 4, 15, 17});         // SA
    case 5: return mask_of({1, 2, 5, 26});          // SU
    default: throw std::invalid_argument("expression index out of range");
  }
}

int expression_core_au(int expression) {
  static constexpr int core[6] = {23, 9, 20, 12, 15, 26};
  if (expression < 0 || expression >= 6) throw std::invalid_argument("expression index out of range");
  return core[expression];
}

std::string synth_subject_id(std::size_t subject) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%03zu", subject + 1);
  return buf;
}

SynthScan synth_scan(const SynthConfig& cfg, std::size_t subject, int expression, int level) {
  cfg.validate();
  if (expression < 0 || expression >= static_cast<int>(kExpressionCodes.size()))
    throw std::invalid_argument("synth: expression index out of range");
  if (level < 1 || level > kMaxIntensity) throw std::invalid_argument("synth: level out of range");
  return render(cfg, subject, expression, level);
}

SynthScan synth_neutral(const SynthConfig& cfg, std::size_t subject) {
  cfg.validate();
  return render(cfg, subject, -1, 0);
}

DatasetManifest synth_generate(const SynthConfig& cfg, const std::filesystem::path& out, std::size_t jobs) {
  cfg.validate();
  std::filesystem::create_directories(out / "meshes");
  std::filesystem::create_directories(out / "landmarks");
  DatasetManifest manifest;
  manifest.base_dir = out;
  std::vector<int> expr = cfg.expressions;
  std::sort(expr.begin(), expr.end());
  expr.erase(std::unique(expr.begin(), expr.end()), expr.end());
  std::vector<int> levels = cfg.levels;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  for (std::size_t s = 0; s < cfg.subjects; ++s)
    for (int e : expr)
      for (int l : levels) {
        ManifestRecord r;
        r.subject = synth_subject_id(s);
        r.expression = e;
        r.intensity = l;
        const std::string stem = r.subject + "_" + std::string(expression_code(e)) + "_" + std::to_string(l);
        r.mesh = std::filesystem::path("meshes") / (stem + ".obj");
        r.landmarks = std::filesystem::path("landmarks") / (stem + ".csv");
        r.has_aus = true;
        manifest.records.push_back(std::move(r));
      }
  parallel_for(manifest.records.size(), jobs, [&](std::size_t i) {
    auto& r = manifest.records[i];
    const std::size_t subject = i / (expr.size() * levels.size());
    const SynthScan scan = render(cfg, subject, r.expression, r.intensity);
    r.aus = scan.aus;
    save_obj(scan.mesh, out / r.mesh);
    save_landmarks(scan.landmarks, out / r.landmarks);
  });
  save_manifest_csv(manifest, out / "manifest.csv");
  return manifest;
}

}  // namespace facelap
