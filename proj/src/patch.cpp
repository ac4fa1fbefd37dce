#include "facelap/patch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace facelap {

void PatchConfig::validate() const {
  if (!(lambda_min > 0.0) || !(lambda_max > lambda_min)) {
    throw std::invalid_argument("PatchConfig: need 0 < lambda_min < lambda_max");
  }
  if (curves < 2) throw std::invalid_argument("PatchConfig: need at least 2 curves");
  if (samples < 3) throw std::invalid_argument("PatchConfig: need at least 3 samples per curve");
}

double PatchConfig::level(std::size_t k) const {
  return lambda_min + static_cast<double>(k) * (lambda_max - lambda_min) / static_cast<double>(curves - 1);
}

namespace {

std::string context(const std::string& label, double lambda) {
  std::ostringstream ss;
  ss << "landmark '" << (label.empty() ? "?" : label) << "', lambda " << lambda << " mm: ";
  return ss.str();
}

// Point on segment a->b at distance lambda from r; |a - r| < lambda <= |b - r|.
Vec3 sphere_crossing(const Vec3& a, const Vec3& b, const Vec3& r, double lambda) {
  const Vec3 e = b - a;
  const Vec3 ar = a - r;
  const double qa = dot(e, e);
  const double qb = dot(ar, e);
  const double qc = dot(ar, ar) - lambda * lambda;  // < 0
  const double disc = std::sqrt(std::max(0.0, qb * qb - qa * qc));
  double t = qb >= 0.0 ? -qc / (qb + disc) : (disc - qb) / qa;
  t = std::clamp(t, 0.0, 1.0);
  return a + e * t;
}

void plane_frame(const Vec3& normal, Vec3& u, Vec3& w) {
  const Vec3 helper = std::abs(normal.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  u = normalized(cross(normal, helper));
  w = cross(normal, u);
}

// Winding number of a closed polyline around the axis through r along normal.
double winding(std::span<const Vec3> pts, const Vec3& r, const Vec3& normal) {
  Vec3 u, w;
  plane_frame(normal, u, w);
  double total = 0.0;
  const std::size_t n = pts.size();
  auto angle = [&](const Vec3& p) {
    const Vec3 d = p - r;
    return std::atan2(dot(d, w), dot(d, u));
  };
  double prev = angle(pts[0]);
  for (std::size_t i = 1; i <= n; ++i) {
    const double cur = angle(pts[i % n]);
    double d = cur - prev;
    while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
    while (d < -std::numbers::pi) d += 2 * std::numbers::pi;
    total += d;
    prev = cur;
  }
  return total / (2 * std::numbers::pi);
}

std::uint64_t edge_key(std::uint32_t inside, std::uint32_t outside) {
  return (static_cast<std::uint64_t>(inside) << 32) | outside;
}

}  // namespace

LevelSetExtractor::LevelSetExtractor(const TriangleMesh& mesh) : mesh_(&mesh) {
  const std::size_t n = mesh.vertex_count();
  const auto edges = mesh.edges();
  std::vector<std::uint32_t> deg(n, 0);
  for (const auto& [a, b] : edges) {
    ++deg[a];
    ++deg[b];
  }
  adj_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) adj_offsets_[i + 1] = adj_offsets_[i] + deg[i];
  adj_.resize(adj_offsets_[n]);
  std::vector<std::uint32_t> fill(adj_offsets_.begin(), adj_offsets_.end() - 1);
  for (const auto& [a, b] : edges) {
    adj_[fill[a]++] = b;
    adj_[fill[b]++] = a;
  }

  std::vector<std::uint32_t> fdeg(n, 0);
  for (const Face& f : mesh.faces())
    for (auto v : f) ++fdeg[v];
  vf_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) vf_offsets_[i + 1] = vf_offsets_[i] + fdeg[i];
  vf_.resize(vf_offsets_[n]);
  fill.assign(vf_offsets_.begin(), vf_offsets_.end() - 1);
  for (std::size_t f = 0; f < mesh.face_count(); ++f)
    for (auto v : mesh.faces()[f]) vf_[fill[v]++] = static_cast<std::uint32_t>(f);
}

LevelCurve LevelSetExtractor::extract(const Vec3& r, double lambda, std::span<const double> dist,
                                      std::size_t seed, const Vec3& normal,
                                      const std::string& label) const {
  using Kind = PatchError::Kind;
  const TriangleMesh& mesh = *mesh_;
  if (!(lambda > 0.0)) throw std::invalid_argument(context(label, lambda) + "lambda must be positive");
  if (dist.size() != mesh.vertex_count()) throw std::invalid_argument("distance field size mismatch");
  if (seed >= mesh.vertex_count() || !(dist[seed] < lambda)) {
    throw PatchError(Kind::LevelAbsent, context(label, lambda) + "no mesh vertex lies inside the level set");
  }

  // Connected sub-level region containing the seed.
  std::vector<std::uint8_t> in_region(mesh.vertex_count(), 0);
  std::vector<std::uint32_t> region{static_cast<std::uint32_t>(seed)};
  in_region[seed] = 1;
  for (std::size_t head = 0; head < region.size(); ++head) {
    const std::uint32_t v = region[head];
    for (std::uint32_t k = adj_offsets_[v]; k < adj_offsets_[v + 1]; ++k) {
      const std::uint32_t nb = adj_[k];
      if (!in_region[nb] && dist[nb] < lambda) {
        in_region[nb] = 1;
        region.push_back(nb);
      }
    }
  }

  // Contour graph: nodes are crossed edges (inside, outside); every straddling
  // face incident to the region links its two crossed edges.
  std::unordered_map<std::uint64_t, std::uint32_t> node_of;
  std::vector<std::uint64_t> node_key;
  std::vector<std::vector<std::uint32_t>> links;
  auto node = [&](std::uint32_t inside, std::uint32_t outside) {
    const auto key = edge_key(inside, outside);
    auto [it, added] = node_of.try_emplace(key, static_cast<std::uint32_t>(node_key.size()));
    if (added) {
      node_key.push_back(key);
      links.emplace_back();
    }
    return it->second;
  };

  std::vector<std::uint32_t> faces;
  for (std::uint32_t v : region)
    for (std::uint32_t k = vf_offsets_[v]; k < vf_offsets_[v + 1]; ++k) faces.push_back(vf_[k]);
  std::sort(faces.begin(), faces.end());
  faces.erase(std::unique(faces.begin(), faces.end()), faces.end());

  for (std::uint32_t f : faces) {
    const Face& t = mesh.faces()[f];
    std::uint32_t ins[3], outs[3];
    int ni = 0, no = 0;
    for (auto v : t) {
      if (in_region[v]) ins[ni++] = v;
      else if (dist[v] >= lambda) outs[no++] = v;
    }
    if (ni == 0 || no == 0) continue;
    std::uint32_t a, b;
    if (ni == 1 && no == 2) {
      a = node(ins[0], outs[0]);
      b = node(ins[0], outs[1]);
    } else if (ni == 2 && no == 1) {
      a = node(ins[0], outs[0]);
      b = node(ins[1], outs[0]);
    } else {
      continue;
    }
    links[a].push_back(b);
    links[b].push_back(a);
  }

  if (node_key.empty()) {
    throw PatchError(Kind::LevelAbsent,
                     context(label, lambda) + "level set never leaves the surface (beyond patch reach)");
  }

  // Walk components in ascending key order for determinism.
  std::vector<std::uint32_t> order(node_key.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return node_key[x] < node_key[y]; });

  std::vector<std::uint8_t> seen(node_key.size(), 0);
  std::vector<std::vector<Vec3>> enclosing;
  bool has_open = false;
  bool has_nonmanifold = false;
  std::size_t closed_count = 0;

  for (std::uint32_t start : order) {
    if (seen[start]) continue;
    // Gather the component.
    std::vector<std::uint32_t> comp{start};
    seen[start] = 1;
    bool open = false;
    for (std::size_t h = 0; h < comp.size(); ++h) {
      const auto& l = links[comp[h]];
      if (l.size() == 1) open = true;
      if (l.size() > 2) has_nonmanifold = true;
      for (auto nb : l) {
        if (!seen[nb]) {
          seen[nb] = 1;
          comp.push_back(nb);
        }
      }
    }
    if (open) {
      has_open = true;
      continue;
    }
    bool simple = true;
    for (auto c : comp) simple = simple && links[c].size() == 2;
    if (!simple) continue;
    ++closed_count;

    std::vector<Vec3> pts;
    pts.reserve(comp.size());
    std::uint32_t prev = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t cur = start;
    for (std::size_t step = 0; step < comp.size(); ++step) {
      const auto key = node_key[cur];
      const auto a = static_cast<std::uint32_t>(key >> 32);
      const auto b = static_cast<std::uint32_t>(key & 0xffffffffu);
      pts.push_back(sphere_crossing(mesh.vertices()[a], mesh.vertices()[b], r, lambda));
      const auto& l = links[cur];
      const std::uint32_t next = (l[0] != prev) ? l[0] : l[1];
      prev = cur;
      cur = next;
    }
    // A vertex lying exactly on the level is the crossing of all its inside
    // edges; keep one copy.
    pts.erase(std::unique(pts.begin(), pts.end(), [](const Vec3& x, const Vec3& y) { return x == y; }), pts.end());
    while (pts.size() > 1 && pts.back() == pts.front()) pts.pop_back();
    if (std::abs(winding(pts, r, normal)) > 0.5) enclosing.push_back(std::move(pts));
  }

  if (enclosing.size() == 1) return LevelCurve{std::move(enclosing.front()), lambda};
  if (enclosing.size() > 1 || has_nonmanifold) {
    throw PatchError(Kind::Ambiguous, context(label, lambda) + std::to_string(enclosing.size()) +
                                          " contour components enclose the landmark");
  }
  if (has_open) {
    throw PatchError(Kind::OpenContour, context(label, lambda) + "contour reaches the mesh border");
  }
  throw PatchError(Kind::Ambiguous, context(label, lambda) + std::to_string(closed_count) +
                                        " contour component(s), none enclosing the landmark");
}

LevelCurve extract_level_curve(const TriangleMesh& mesh, const Vec3& r, double lambda,
                               const std::string& label) {
  if (mesh.empty()) throw PatchError(PatchError::Kind::LevelAbsent, context(label, lambda) + "empty mesh");
  const LevelSetExtractor ex(mesh);
  const auto dist = distance_field(mesh, r);
  const std::size_t seed = nearest_vertex(mesh, r);
  return ex.extract(r, lambda, dist, seed, vertex_normal(mesh, seed), label);
}

std::vector<Vec3> resample_uniform(std::span<const Vec3> pts, std::size_t m) {
  const std::size_t n = pts.size();
  if (n < 2 || m == 0) throw PatchError(PatchError::Kind::Degenerate, "resample_uniform: curve too short");
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + distance(pts[i], pts[(i + 1) % n]);
  const double total = cum[n];
  if (!(total > 0.0)) throw PatchError(PatchError::Kind::Degenerate, "resample_uniform: zero arclength");

  std::vector<Vec3> out;
  out.reserve(m);
  std::size_t seg = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double s = total * static_cast<double>(j) / static_cast<double>(m);
    while (seg + 1 < n && cum[seg + 1] <= s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? (s - cum[seg]) / len : 0.0;
    const Vec3& a = pts[seg];
    const Vec3& b = pts[(seg + 1) % n];
    out.push_back(a + (b - a) * t);
  }
  return out;
}

namespace {

CanonicalPatch build_patch_impl(const LevelSetExtractor& ex, const Landmark& landmark,
                                const PatchConfig& cfg, const PatchOptions& opts) {
  cfg.validate();
  const TriangleMesh& mesh = ex.mesh();
  if (mesh.empty()) {
    throw PatchError(PatchError::Kind::LevelAbsent, context(landmark.label, cfg.lambda_min) + "empty mesh");
  }
  const Vec3 r = landmark.position;
  const auto dist = distance_field(mesh, r);
  const std::size_t seed = nearest_vertex(mesh, r);
  const Vec3 normal = vertex_normal(mesh, seed);
  const std::size_t m = cfg.samples;

  CanonicalPatch patch;
  patch.label = landmark.label;
  patch.vertices.reserve(cfg.vertex_count());
  patch.vertices.push_back(r);

  std::vector<Vec3> prev;
  for (std::size_t k = 0; k < cfg.curves; ++k) {
    const double lambda = cfg.level(k);
    LevelCurve curve = ex.extract(r, lambda, dist, seed, normal, landmark.label);
    auto& pts = curve.points;

    // Counter-clockwise about the apex normal.
    double signed_area = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      signed_area += dot(cross(pts[i] - r, pts[(i + 1) % pts.size()] - r), normal);
    }
    if (signed_area < 0.0) std::reverse(pts.begin(), pts.end());

    std::size_t start = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double proj = dot(pts[i] - r, opts.reference_axis);
      if (proj > best) {
        best = proj;
        start = i;
      }
    }
    std::rotate(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(start), pts.end());

    std::vector<Vec3> samples;
    try {
      samples = resample_uniform(pts, m);
    } catch (const PatchError& e) {
      throw PatchError(e.kind(), context(landmark.label, lambda) + e.what());
    }

    if (!prev.empty()) {
      std::size_t best_shift = 0;
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < m; ++s) {
        double cost = 0.0;
        for (std::size_t j = 0; j < m; ++j) cost += distance(samples[(j + s) % m], prev[j]);
        if (cost < best_cost) {
          best_cost = cost;
          best_shift = s;
        }
      }
      std::rotate(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(best_shift), samples.end());
    }
    patch.vertices.insert(patch.vertices.end(), samples.begin(), samples.end());
    prev = std::move(samples);
  }

  for (Vec3& v : patch.vertices) v -= r;

  if (opts.frame == PatchFrame::NormalAligned) {
    const Vec3 z = normal;
    Vec3 x = patch.vertices[1] - z * dot(patch.vertices[1], z);
    if (norm(x) == 0.0) {
      Vec3 w;
      plane_frame(z, x, w);
    }
    x = normalized(x);
    const Vec3 y = cross(z, x);
    for (Vec3& v : patch.vertices) v = {dot(v, x), dot(v, y), dot(v, z)};
  }
  return patch;
}

}  // namespace

CanonicalPatch build_patch(const TriangleMesh& mesh, const Landmark& landmark, const PatchConfig& cfg,
                           const PatchOptions& opts) {
  const LevelSetExtractor ex(mesh);
  return build_patch_impl(ex, landmark, cfg, opts);
}

std::vector<CanonicalPatch> extract_patches(const TriangleMesh& mesh, const LandmarkSet& landmarks,
                                            const PatchConfig& cfg, const PatchOptions& opts) {
  cfg.validate();
  const LevelSetExtractor ex(mesh);
  std::vector<CanonicalPatch> out;
  out.reserve(landmarks.size());
  for (const Landmark& l : landmarks.entries()) {
    try {
      out.push_back(build_patch_impl(ex, l, cfg, opts));
    } catch (const PatchError& e) {
      CanonicalPatch missing;
      missing.label = l.label;
      missing.vertices.assign(cfg.vertex_count(), Vec3{});
      missing.missing = true;
      missing.error = e.what();
      out.push_back(std::move(missing));
    }
  }
  return out;
}

std::vector<Face> canonical_connectivity(const PatchConfig& cfg) {
  cfg.validate();
  const auto m = static_cast<std::uint32_t>(cfg.samples);
  const auto K = static_cast<std::uint32_t>(cfg.curves);
  auto idx = [m](std::uint32_t k, std::uint32_t j) { return 1 + k * m + (j % m); };
  std::vector<Face> faces;
  faces.reserve(m + 2 * m * (K - 1));
  for (std::uint32_t j = 0; j < m; ++j) faces.push_back({0, idx(0, j), idx(0, j + 1)});
  for (std::uint32_t k = 0; k + 1 < K; ++k) {
    for (std::uint32_t j = 0; j < m; ++j) {
      faces.push_back({idx(k, j), idx(k + 1, j), idx(k + 1, j + 1)});
      faces.push_back({idx(k, j), idx(k + 1, j + 1), idx(k, j + 1)});
    }
  }
  return faces;
}

}  // namespace facelap
