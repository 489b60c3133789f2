#include "blmol/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "blmol/errors.hpp"

namespace blmol {

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  if (a.size() != b.size()) throw ContractError("dominates: length mismatch");
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

std::vector<std::vector<std::size_t>> non_dominated_sort(
    const std::vector<ObjectiveVector>& points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> fronts;
  if (n == 0) return fronts;

  std::vector<int> dominated_by(n, 0);            // how many points dominate i
  std::vector<std::vector<std::size_t>> dominee(n);  // points i dominates
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dominates(points[i], points[j])) {
        dominee[i].push_back(j);
        ++dominated_by[j];
      } else if (dominates(points[j], points[i])) {
        dominee[j].push_back(i);
        ++dominated_by[i];
      }
    }
  }

  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i) {
    if (dominated_by[i] == 0) current.push_back(i);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t i : current) {
      for (std::size_t j : dominee[i]) {
        if (--dominated_by[j] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(const std::vector<ObjectiveVector>& front) {
  const std::size_t n = front.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, 0.0);
  if (n == 0) return dist;
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), inf);
    return dist;
  }

  // Duplicates of an objective vector must come out identical, so the
  // distance is computed over distinct vectors and broadcast back.
  std::map<std::vector<double>, std::size_t> unique_ids;
  std::vector<std::size_t> id_of(n);
  std::vector<ObjectiveVector> distinct;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = unique_ids.try_emplace(front[i].values(), distinct.size());
    if (inserted) distinct.push_back(front[i]);
    id_of[i] = it->second;
  }

  const std::size_t u = distinct.size();
  std::vector<double> udist(u, 0.0);
  if (u <= 2) {
    std::fill(udist.begin(), udist.end(), inf);
  } else {
    const std::size_t m = distinct[0].size();
    std::vector<std::size_t> order(u);
    for (std::size_t obj = 0; obj < m; ++obj) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return distinct[a][obj] < distinct[b][obj];
      });
      const double lo = distinct[order.front()][obj];
      const double hi = distinct[order.back()][obj];
      udist[order.front()] = inf;
      udist[order.back()] = inf;
      const double range = hi - lo;
      if (range <= 0.0) continue;
      for (std::size_t k = 1; k + 1 < u; ++k) {
        const double gap = distinct[order[k + 1]][obj] - distinct[order[k - 1]][obj];
        udist[order[k]] += gap / range;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) dist[i] = udist[id_of[i]];
  return dist;
}

namespace {

// 2D sweep over points already filtered to be strictly inside ref and
// mutually non-dominated, sorted by first coordinate ascending.
double hv2_sorted(const std::vector<std::pair<double, double>>& pts, double rx, double ry) {
  double volume = 0.0;
  double prev_y = ry;
  for (const auto& [x, y] : pts) {
    volume += (rx - x) * (prev_y - y);
    prev_y = y;
  }
  return volume;
}

std::vector<std::pair<double, double>> nd_filter_2d(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> kept;
  double best_y = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    if (p.second < best_y) {
      kept.push_back(p);
      best_y = p.second;
    }
  }
  return kept;
}

double hv2(const std::vector<ObjectiveVector>& front, double rx, double ry) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : front) {
    if (p[0] < rx && p[1] < ry) pts.emplace_back(p[0], p[1]);
  }
  if (pts.empty()) return 0.0;
  return hv2_sorted(nd_filter_2d(std::move(pts)), rx, ry);
}

// Slice along the third coordinate: between consecutive z-levels the
// dominated area is the 2D hypervolume of the points at or below the slice.
double hv3(const std::vector<ObjectiveVector>& front, const ObjectiveVector& ref) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < front.size(); ++i) {
    if (front[i][0] < ref[0] && front[i][1] < ref[1] && front[i][2] < ref[2]) idx.push_back(i);
  }
  if (idx.empty()) return 0.0;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return front[a][2] < front[b][2]; });

  double volume = 0.0;
  std::vector<std::pair<double, double>> active;
  for (std::size_t k = 0; k < idx.size();) {
    const double z = front[idx[k]][2];
    while (k < idx.size() && front[idx[k]][2] == z) {
      active.emplace_back(front[idx[k]][0], front[idx[k]][1]);
      ++k;
    }
    const double z_next = (k < idx.size()) ? front[idx[k]][2] : ref[2];
    const double area = hv2_sorted(nd_filter_2d(active), ref[0], ref[1]);
    volume += area * (z_next - z);
  }
  return volume;
}

}  // namespace

double hypervolume(const std::vector<ObjectiveVector>& front, const ObjectiveVector& ref) {
  if (front.empty()) return 0.0;
  for (const auto& p : front) {
    if (p.size() != ref.size()) throw ContractError("hypervolume: length mismatch with ref");
  }
  switch (ref.size()) {
    case 2:
      return hv2(front, ref[0], ref[1]);
    case 3:
      return hv3(front, ref);
    default:
      throw ContractError("hypervolume: only 2 or 3 objectives supported");
  }
}

}  // namespace blmol
