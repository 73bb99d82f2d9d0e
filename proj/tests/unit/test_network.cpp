#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "rivex/catchment.hpp"
#include "rivex/errors.hpp"
#include "rivex/network.hpp"

using namespace rivex;
using rivex::test::small_network;

TEST_SUITE("network") {

TEST_CASE("flow relation and between sets") {
  const RiverNetwork net = small_network();
  const NetLocation t1{1, 2.0};
  const NetLocation t2{2, 5.0};
  const NetLocation t3{3, 5.0};

  const FlowQuery a = net.flow_relation(t1, t2);
  CHECK(a.relation == FlowRelation::connected_upstream);
  CHECK(a.between == std::vector<int>{2});

  const FlowQuery b = net.flow_relation(t2, t1);
  CHECK(b.relation == FlowRelation::connected_downstream);
  CHECK(b.between == std::vector<int>{2});

  const FlowQuery same = net.flow_relation(t2, t2);
  CHECK(same.relation == FlowRelation::same_segment);
  CHECK(same.between.empty());

  CHECK(net.flow_relation(t2, t3).relation == FlowRelation::unconnected);
  CHECK_FALSE(net.flow_relation(NetLocation{4, 1.0}, NetLocation{5, 1.0}).connected());

  std::vector<int> deep = net.flow_relation(t1, NetLocation{4, 3.0}).between;
  std::sort(deep.begin(), deep.end());
  CHECK(deep == std::vector<int>{2, 4});
}

TEST_CASE("invalid locations are input errors") {
  const RiverNetwork net = small_network();
  CHECK_THROWS_AS(net.flow_relation(NetLocation{9, 0.0}, NetLocation{1, 0.0}), InputError);
  CHECK_THROWS_AS(net.flow_relation(NetLocation{1, 11.0}, NetLocation{1, 0.0}), InputError);
  CHECK_THROWS_AS(net.flow_relation(NetLocation{1, -0.5}, NetLocation{1, 0.0}), InputError);
}

TEST_CASE("river distance") {
  const RiverNetwork net = small_network();
  CHECK(net.river_distance({2, 4.0}, {2, 4.0}) == 0.0);
  CHECK(net.river_distance({1, 3.0}, {1, 10.0}) == doctest::Approx(7.0));
  // 5 km and 8 km above the junction on sibling branches
  CHECK(net.river_distance({2, 5.0}, {3, 8.0}) == doctest::Approx(13.0));
  CHECK(net.river_distance({1, 0.0}, {4, 10.0}) == doctest::Approx(30.0));
}

TEST_CASE("river distance is a tree metric") {
  const RiverNetwork net = small_network();
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> seg(1, 5);
  std::uniform_real_distribution<double> off(0.0, 10.0);
  for (int r = 0; r < 200; ++r) {
    const NetLocation a{seg(rng), off(rng)};
    const NetLocation b{seg(rng), off(rng)};
    const NetLocation c{seg(rng), off(rng)};
    const double ab = net.river_distance(a, b);
    CHECK(ab == doctest::Approx(net.river_distance(b, a)).epsilon(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ab <= net.river_distance(a, c) + net.river_distance(c, b) + 1e-9);
    const FlowQuery q = net.flow_relation(a, b);
    const FlowQuery p = net.flow_relation(b, a);
    CHECK((q.relation == FlowRelation::connected_upstream) == (p.relation == FlowRelation::connected_downstream));
  }
}

TEST_CASE("weight products") {
  const RiverNetwork net = small_network();
  CHECK(net.weight_product({2, 1.0}, {2, 7.0}) == 1.0);
  CHECK(net.weight_product({1, 1.0}, {2, 7.0}) == doctest::Approx(0.5));
  CHECK(net.weight_product({1, 1.0}, {4, 7.0}) == doctest::Approx(0.25));
  CHECK_THROWS_AS(net.weight_product({2, 1.0}, {3, 1.0}), DomainError);
  // multiplicative along the path
  const double direct = net.weight_product({1, 1.0}, {5, 2.0});
  CHECK(direct == doctest::Approx(net.weight_product({1, 1.0}, {2, 3.0}) * net.weight_product({2, 3.0}, {5, 2.0})));
}

TEST_CASE("junction weights from altitude volumes") {
  CHECK(junction_weights_from_altitude(std::vector<double>{3.0, 3.0}) == std::vector<double>{0.5, 0.5});
  const std::vector<double> w = junction_weights_from_altitude(std::vector<double>{1.0, 3.0});
  CHECK(w[0] == doctest::Approx(0.25));
  CHECK(w[1] == doctest::Approx(0.75));
  const std::vector<double> w3 = junction_weights_from_altitude(std::vector<double>{1.0, 1.0, 2.0});
  CHECK(w3[0] == doctest::Approx(0.25));
  CHECK(w3[2] == doctest::Approx(0.5));
  CHECK_THROWS_AS(junction_weights_from_altitude(std::vector<double>{1.0, 0.0}), InputError);
}

TEST_CASE("network validation on load") {
  std::vector<Segment> bad{{1, {{0, 0}, {0, 10}}, 10.0, std::nullopt, 1.0},
                           {2, {{0, 10}, {0, 20}}, 10.0, 1, 0.4},
                           {3, {{0, 10}, {5, 20}}, 0.0, 1, 0.4}};
  bad[2].arc_length = std::hypot(5.0, 10.0);
  CHECK_THROWS_AS(RiverNetwork{bad}, InputError);  // weights sum to 0.8

  std::vector<Segment> cyc{{1, {{0, 0}, {0, 10}}, 10.0, std::nullopt, 1.0},
                           {2, {{0, 10}, {0, 20}}, 10.0, 3, 1.0},
                           {3, {{0, 20}, {0, 30}}, 10.0, 2, 1.0}};
  CHECK_THROWS_AS(RiverNetwork{cyc}, InputError);

  std::vector<Segment> len{{1, {{0, 0}, {0, 10}}, 12.0, std::nullopt, 1.0}};
  CHECK_THROWS_AS(RiverNetwork{len}, InputError);
}

TEST_CASE("positions and snapping") {
  const RiverNetwork net = small_network();
  const Point2 p = net.position({2, 5.0});
  CHECK(p[0] == doctest::Approx(-3.0));
  CHECK(p[1] == doctest::Approx(14.0));
  const NetLocation s = net.snap({-3.05, 14.0}, 0.1);
  CHECK(s.segment_id == 2);
  CHECK(s.offset == doctest::Approx(5.0).epsilon(0.01));
  CHECK_THROWS_AS(net.snap({30.0, 30.0}, 0.1), InputError);
}

TEST_CASE("catchment summaries") {
  ElevationGrid g;
  g.nx = 2;
  g.ny = 1;
  g.cell_km = 1.0;
  g.x0 = -0.5;
  g.y0 = -0.5;
  g.altitude = {1.0, 3.0};
  const CatchmentSummary two = catchment_summary(g, {{0, 0}, {1, 0}}, NetLocation{1, 0.0});
  CHECK(two.hydro_position[0] == doctest::Approx(0.75));
  CHECK(two.altitude_volume == doctest::Approx(4.0));
  CHECK(two.area == doctest::Approx(2.0));
  CHECK(two.mean_altitude == doctest::Approx(2.0));

  const CatchmentSummary one = catchment_summary(g, {{1, 0}}, NetLocation{1, 0.0});
  CHECK(one.hydro_position[0] == doctest::Approx(1.0));
  CHECK(one.hydro_position[1] == doctest::Approx(0.0));
  CHECK(one.altitude_volume == doctest::Approx(3.0));

  ElevationGrid flat;
  flat.nx = 4;
  flat.ny = 4;
  flat.cell_km = 2.0;
  flat.altitude.assign(16, 700.0);
  std::vector<Cell> square{{1, 1}, {2, 1}, {1, 2}, {2, 2}};
  const CatchmentSummary sq = catchment_summary(flat, square, NetLocation{1, 0.0});
  CHECK(sq.hydro_position[0] == doctest::Approx(4.0));
  CHECK(sq.hydro_position[1] == doctest::Approx(4.0));
  CHECK(sq.mean_slope == doctest::Approx(0.0));

  CHECK_THROWS_AS(catchment_summary(flat, {}, NetLocation{1, 0.0}), InputError);
}

}  // TEST_SUITE
