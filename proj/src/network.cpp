#include "rivex/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rivex/errors.hpp"

namespace rivex {
namespace {

double chord_sum(const std::vector<Point2>& line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    total += std::hypot(line[i][0] - line[i - 1][0], line[i][1] - line[i - 1][1]);
  }
  return total;
}

}  // namespace

RiverNetwork::RiverNetwork(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw InputError("river network has no segments");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    Segment& seg = segments_[i];
    if (!index_.emplace(seg.id, i).second) {
      throw InputError("duplicate segment id " + std::to_string(seg.id));
    }
    if (seg.polyline.size() < 2) {
      throw InputError("segment " + std::to_string(seg.id) + " needs at least two polyline vertices");
    }
    const double chords = chord_sum(seg.polyline);
    if (!(chords > 0.0)) throw InputError("segment " + std::to_string(seg.id) + " has zero length");
    if (seg.arc_length > 0.0 && std::abs(seg.arc_length - chords) > 1e-9 * chords) {
      throw InputError("segment " + std::to_string(seg.id) + ": arc_length " + std::to_string(seg.arc_length) +
                       " disagrees with polyline length " + std::to_string(chords));
    }
    seg.arc_length = chords;
    if (!(seg.junction_weight > 0.0 && seg.junction_weight <= 1.0)) {
      throw InputError("segment " + std::to_string(seg.id) + ": junction weight must lie in (0, 1]");
    }
  }

  parent_.assign(segments_.size(), -1);
  int roots = 0;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& down = segments_[i].downstream;
    if (!down) {
      ++roots;
      root_ = i;
      continue;
    }
    auto it = index_.find(*down);
    if (it == index_.end()) {
      throw InputError("segment " + std::to_string(segments_[i].id) + " drains into unknown segment " +
                       std::to_string(*down));
    }
    parent_[i] = static_cast<int>(it->second);
  }
  if (roots != 1) throw InputError("river network must have exactly one root, found " + std::to_string(roots));

  depth_.assign(segments_.size(), 0);
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    int cur = parent_[i];
    int steps = 0;
    while (cur >= 0) {
      if (++steps > static_cast<int>(segments_.size())) {
        throw InputError("river network contains a cycle through segment " + std::to_string(segments_[i].id));
      }
      cur = parent_[static_cast<std::size_t>(cur)];
    }
    depth_[i] = steps;
  }

  // Junction weights of the branches merging into each segment must sum to one.
  std::vector<double> sums(segments_.size(), 0.0);
  std::vector<int> counts(segments_.size(), 0);
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (parent_[i] >= 0) {
      sums[static_cast<std::size_t>(parent_[i])] += segments_[i].junction_weight;
      ++counts[static_cast<std::size_t>(parent_[i])];
    }
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (counts[i] > 0 && std::abs(sums[i] - 1.0) > 1e-9) {
      throw InputError("junction weights at the upstream end of segment " + std::to_string(segments_[i].id) +
                       " sum to " + std::to_string(sums[i]) + " instead of 1");
    }
  }
}

std::size_t RiverNetwork::index_of(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw InputError("unknown segment id " + std::to_string(id));
  return it->second;
}

const Segment& RiverNetwork::segment(int id) const { return segments_[index_of(id)]; }

bool RiverNetwork::has_segment(int id) const { return index_.contains(id); }

std::vector<int> RiverNetwork::upstream_of(int id) const {
  const auto idx = static_cast<int>(index_of(id));
  std::vector<int> out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (parent_[i] == idx) out.push_back(segments_[i].id);
  }
  return out;
}

std::vector<int> RiverNetwork::downstream_set(int segment_id) const {
  std::vector<int> out;
  for (int cur = static_cast<int>(index_of(segment_id)); cur >= 0; cur = parent_[static_cast<std::size_t>(cur)]) {
    out.push_back(segments_[static_cast<std::size_t>(cur)].id);
  }
  return out;
}

void RiverNetwork::validate(const NetLocation& loc) const {
  const Segment& seg = segment(loc.segment_id);
  if (!(loc.offset >= 0.0 && loc.offset <= seg.arc_length * (1.0 + 1e-12))) {
    throw InputError("offset " + std::to_string(loc.offset) + " km lies outside segment " +
                     std::to_string(loc.segment_id) + " of length " + std::to_string(seg.arc_length));
  }
}

Point2 RiverNetwork::position(const NetLocation& loc) const {
  validate(loc);
  const auto& line = segment(loc.segment_id).polyline;
  double remaining = loc.offset;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double len = std::hypot(line[i][0] - line[i - 1][0], line[i][1] - line[i - 1][1]);
    if (remaining <= len || i + 1 == line.size()) {
      const double f = len > 0.0 ? std::min(remaining / len, 1.0) : 0.0;
      return {line[i - 1][0] + f * (line[i][0] - line[i - 1][0]), line[i - 1][1] + f * (line[i][1] - line[i - 1][1])};
    }
    remaining -= len;
  }
  return line.back();
}

NetLocation RiverNetwork::snap(const Point2& p, double tolerance_km) const {
  double best = std::numeric_limits<double>::infinity();
  NetLocation out;
  for (const Segment& seg : segments_) {
    double along = 0.0;
    for (std::size_t i = 1; i < seg.polyline.size(); ++i) {
      const Point2& a = seg.polyline[i - 1];
      const Point2& b = seg.polyline[i];
      const double dx = b[0] - a[0];
      const double dy = b[1] - a[1];
      const double len2 = dx * dx + dy * dy;
      double f = len2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
      f = std::clamp(f, 0.0, 1.0);
      const double dist = std::hypot(a[0] + f * dx - p[0], a[1] + f * dy - p[1]);
      if (dist < best) {
        best = dist;
        out = {seg.id, std::min(along + f * std::sqrt(len2), seg.arc_length)};
      }
      along += std::sqrt(len2);
    }
  }
  if (best > tolerance_km) {
    throw InputError("point (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) + ") is " +
                     std::to_string(best) + " km from the network, beyond the snap tolerance");
  }
  return out;
}

bool RiverNetwork::drains_into(int a, int b) const {
  const auto target = static_cast<int>(index_of(b));
  for (int cur = static_cast<int>(index_of(a)); cur >= 0; cur = parent_[static_cast<std::size_t>(cur)]) {
    if (cur == target) return true;
  }
  return false;
}

FlowQuery RiverNetwork::flow_relation(const NetLocation& s, const NetLocation& t) const {
  validate(s);
  validate(t);
  FlowQuery q;
  if (s.segment_id == t.segment_id) {
    q.relation = FlowRelation::same_segment;
    return q;
  }
  auto collect = [&](int from, int stop) {
    std::vector<int> ids;
    const auto stop_idx = static_cast<int>(index_of(stop));
    for (int cur = static_cast<int>(index_of(from)); cur != stop_idx; cur = parent_[static_cast<std::size_t>(cur)]) {
      ids.push_back(segments_[static_cast<std::size_t>(cur)].id);
    }
    return ids;
  };
  if (drains_into(s.segment_id, t.segment_id)) {
    q.relation = FlowRelation::connected_downstream;
    q.between = collect(s.segment_id, t.segment_id);
  } else if (drains_into(t.segment_id, s.segment_id)) {
    q.relation = FlowRelation::connected_upstream;
    q.between = collect(t.segment_id, s.segment_id);
  } else {
    q.relation = FlowRelation::unconnected;
  }
  return q;
}

double RiverNetwork::river_distance(const NetLocation& s, const NetLocation& t) const {
  validate(s);
  validate(t);
  if (s.segment_id == t.segment_id) return std::abs(s.offset - t.offset);

  int a = static_cast<int>(index_of(s.segment_id));
  int b = static_cast<int>(index_of(t.segment_id));
  int ua = a;
  int ub = b;
  while (depth_[static_cast<std::size_t>(ua)] > depth_[static_cast<std::size_t>(ub)]) ua = parent_[static_cast<std::size_t>(ua)];
  while (depth_[static_cast<std::size_t>(ub)] > depth_[static_cast<std::size_t>(ua)]) ub = parent_[static_cast<std::size_t>(ub)];
  while (ua != ub) {
    ua = parent_[static_cast<std::size_t>(ua)];
    ub = parent_[static_cast<std::size_t>(ub)];
  }
  const int lca = ua;

  // Distance from a point on segment `seg` to the upstream end of `lca` (seg strictly upstream).
  auto up_to = [&](int seg, double offset) {
    double d = offset;
    for (int cur = parent_[static_cast<std::size_t>(seg)]; cur != lca; cur = parent_[static_cast<std::size_t>(cur)]) {
      d += segments_[static_cast<std::size_t>(cur)].arc_length;
    }
    return d;
  };
  const double lca_len = segments_[static_cast<std::size_t>(lca)].arc_length;
  if (lca == b) return up_to(a, s.offset) + (lca_len - t.offset);
  if (lca == a) return up_to(b, t.offset) + (lca_len - s.offset);
  return up_to(a, s.offset) + up_to(b, t.offset);
}

double RiverNetwork::weight_product(const NetLocation& s, const NetLocation& t) const {
  const FlowQuery q = flow_relation(s, t);
  if (!q.connected()) {
    throw DomainError("weight_product: locations on segments " + std::to_string(s.segment_id) + " and " +
                      std::to_string(t.segment_id) + " are not flow-connected");
  }
  double w = 1.0;
  for (int id : q.between) w *= std::sqrt(segment(id).junction_weight);
  return w;
}

std::vector<double> junction_weights_from_altitude(std::span<const double> volumes) {
  if (volumes.empty()) throw InputError("junction_weights_from_altitude: no branches given");
  for (double v : volumes) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InputError("junction_weights_from_altitude: integrated altitude must be positive, got " + std::to_string(v));
    }
  }
  const double total = std::accumulate(volumes.begin(), volumes.end(), 0.0);
  std::vector<double> out;
  out.reserve(volumes.size());
  for (double v : volumes) out.push_back(v / total);
  return out;
}

}  // namespace rivex
