#pragma once

#include <array>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace rivex {

using Point2 = std::array<double, 2>;

/// One river segment. The polyline runs from the downstream end (index 0) to the upstream end,
/// so the first vertex coincides with the upstream end of the downstream segment.
struct Segment {
  int id = 0;
  std::vector<Point2> polyline;        // planar coordinates, km
  double arc_length = 0.0;             // km, summed chord lengths
  std::optional<int> downstream;       // absent only for the root
  double junction_weight = 1.0;        // share of this branch at its downstream junction
};

/// A point on the network: `offset` km upstream of the segment's downstream end.
struct NetLocation {
  int segment_id = 0;
  double offset = 0.0;

  friend bool operator==(const NetLocation&, const NetLocation&) = default;
};

enum class FlowRelation {
  same_segment,
  connected_upstream,    // the second location lies upstream of the first
  connected_downstream,  // the second location lies downstream of the first
  unconnected,
};

struct FlowQuery {
  FlowRelation relation = FlowRelation::unconnected;
  std::vector<int> between;  // segment ids of B(s,t); empty for same_segment and unconnected

  bool connected() const { return relation != FlowRelation::unconnected; }
};

/// Immutable dendritic river network.
class RiverNetwork {
 public:
  /// Validates arc lengths, junction weights, a single root and acyclicity.
  explicit RiverNetwork(std::vector<Segment> segments);

  std::span<const Segment> segments() const { return segments_; }
  const Segment& segment(int id) const;
  bool has_segment(int id) const;
  int root_id() const { return segments_[root_].id; }

  /// Ids of the segments draining directly into `id`.
  std::vector<int> upstream_of(int id) const;

  /// D(s): ids of all segments downstream of the location's segment, inclusive, root last.
  std::vector<int> downstream_set(int segment_id) const;

  /// Throws InputError for an unknown segment or an offset outside [0, arc_length].
  void validate(const NetLocation& loc) const;

  /// Planar coordinates of a location (linear interpolation along the polyline).
  Point2 position(const NetLocation& loc) const;

  /// Nearest network location to a planar point; InputError if farther than `tolerance_km`.
  NetLocation snap(const Point2& p, double tolerance_km = 0.1) const;

  /// Relation and between-set B(s,t).
  FlowQuery flow_relation(const NetLocation& s, const NetLocation& t) const;

  /// Length of the tree path between s and t through their common junction.
  double river_distance(const NetLocation& s, const NetLocation& t) const;

  /// Product of sqrt(junction_weight) over B(s,t); DomainError when unconnected.
  double weight_product(const NetLocation& s, const NetLocation& t) const;

  /// True when segment `a` equals `b` or lies upstream of it.
  bool drains_into(int a, int b) const;

 private:
  std::size_t index_of(int id) const;

  std::vector<Segment> segments_;
  std::unordered_map<int, std::size_t> index_;
  std::vector<int> parent_;  // index of downstream segment, -1 for root
  std::vector<int> depth_;   // number of links to the root
  std::size_t root_ = 0;
};

/// Splits a junction among merging branches in proportion to their integrated altitude.
std::vector<double> junction_weights_from_altitude(std::span<const double> volumes);

}  // namespace rivex
