// Independent reference implementations used only by tests.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string_view>
#include <tuple>
#include <vector>

#include "vafs/core.hpp"

namespace oracle {

using Mat3 = std::array<std::array<double, 3>, 3>;

struct Eigen3 {
  std::array<double, 3> values;                // ascending
  std::array<std::array<double, 3>, 3> vectors;  // vectors[i] pairs with values[i]
};

// Cyclic Jacobi rotations on a symmetric 3x3 matrix.
inline Eigen3 jacobi(Mat3 a) {
  Mat3 v{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (off < 1e-300) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::array<int, 3> idx{0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&](int x, int y) { return a[x][x] < a[y][y]; });
  Eigen3 out{};
  for (int i = 0; i < 3; ++i) {
    out.values[i] = a[idx[i]][idx[i]];
    for (int k = 0; k < 3; ++k) out.vectors[i][k] = v[k][idx[i]];
  }
  return out;
}

inline Mat3 covariance(const std::vector<vafs::Point3>& pts) {
  double cx = 0, cy = 0, cz = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
    cz += p.z;
  }
  const double n = static_cast<double>(pts.size());
  cx /= n;
  cy /= n;
  cz /= n;
  Mat3 c{};
  for (const auto& p : pts) {
    const double d[3] = {p.x - cx, p.y - cy, p.z - cz};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) c[i][j] += d[i] * d[j] / n;
  }
  return c;
}

// Mean distance from each point to its k nearest others, by full sort.
inline std::vector<double> knn_mean_distance(const std::vector<vafs::Point3>& pts, std::size_t k) {
  std::vector<double> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      d.push_back(std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y, pts[i].z - pts[j].z));
    }
    std::sort(d.begin(), d.end());
    const std::size_t m = std::min(k, d.size());
    double s = 0;
    for (std::size_t j = 0; j < m; ++j) s += d[j];
    out.push_back(s / static_cast<double>(m));
  }
  return out;
}

// Group-by on floor division with members visited in input order.
inline vafs::ConceptCloud voxel_group_by(const vafs::ConceptCloud& in, double nu) {
  using Key = std::tuple<long long, long long, long long>;
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < in.points.size(); ++i) {
    const auto& p = in.points[i].position;
    groups[{static_cast<long long>(std::floor(p.x / nu)), static_cast<long long>(std::floor(p.y / nu)),
            static_cast<long long>(std::floor(p.z / nu))}]
        .push_back(i);
  }
  vafs::ConceptCloud out;
  out.feature_dim = in.feature_dim;
  out.voxel_size = nu;
  for (const auto& [key, members] : groups) {
    double sx = 0, sy = 0, sz = 0;
    std::vector<double> f(in.feature_dim, 0.0);
    bool same = true;
    for (std::size_t m : members) {
      const auto& p = in.points[m];
      sx += p.position.x;
      sy += p.position.y;
      sz += p.position.z;
      for (std::size_t d = 0; d < f.size(); ++d) f[d] += p.feature[d];
      same = same && p.source_object == in.points[members[0]].source_object;
    }
    double norm = 0;
    for (double x : f) norm += x * x;
    norm = std::sqrt(norm);
    vafs::ConceptPoint cp;
    const double n = static_cast<double>(members.size());
    cp.position = {sx / n, sy / n, sz / n};
    if (norm < 1e-9) {
      cp.feature = in.points[members[0]].feature;
    } else {
      for (double& x : f) x /= norm;
      cp.feature = vafs::FeatureVector(f);
    }
    if (same) cp.source_object = in.points[members[0]].source_object;
    out.points.push_back(cp);
  }
  return out;
}

// 64-bit FNV-1a and splitmix64, written out from their published constants.
inline std::uint64_t fnv(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// One splitmix64 step: advance by the golden gamma, then finalise.
inline std::uint64_t splitmix_next(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::string image_bytes(const vafs::Image& img) {
  std::string s = "I";
  for (std::uint32_t v : {static_cast<std::uint32_t>(img.width), static_cast<std::uint32_t>(img.height)}) {
    for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
  s.append(img.pixels.begin(), img.pixels.end());
  return s;
}

// Unit vector for a hash: component i from splitmix64 at hash + (i+1) * golden gamma.
inline std::vector<double> hash_embedding(std::uint64_t h, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    const std::uint64_t bits = splitmix_next(h + (i + 1) * 0x9E3779B97F4A7C15ULL);
    v[i] = 2.0 * std::ldexp(static_cast<double>(bits >> 11), -53) - 1.0;
    norm += v[i] * v[i];
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace oracle
