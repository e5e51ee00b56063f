#include "meltsim/mesh.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <map>
#include <set>

using namespace meltsim;
using namespace meltsim::mesh_ops;

namespace {

double quad_area(const Mesh &m, int c) {
  const auto &cc = m.cells[static_cast<std::size_t>(c)];
  double a = 0.0;
  for (int k = 0; k < 4; ++k) {
    Vec2 p = m.nodes[static_cast<std::size_t>(cc[static_cast<std::size_t>(k)])];
    Vec2 q = m.nodes[static_cast<std::size_t>(cc[static_cast<std::size_t>((k + 1) % 4)])];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

double total_area(const Mesh &m) {
  double a = 0.0;
  for (int c = 0; c < m.n_cells(); ++c) a += quad_area(m, c);
  return a;
}

// Interior edges must be shared by exactly two cells; boundary edges by one.
void check_conforming(const Mesh &m) {
  std::map<std::pair<int, int>, int> edge_count;
  auto key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
  for (const auto &c : m.cells) {
    int n = m.nodes_per_cell();
    if (n == 2) continue;
    for (int k = 0; k < 4; ++k) edge_count[key(c[static_cast<std::size_t>(k)], c[static_cast<std::size_t>((k + 1) % 4)])]++;
  }
  std::set<std::pair<int, int>> boundary_edges;
  for (const auto &f : m.faces) boundary_edges.insert(key(f.nodes[0], f.nodes[1]));
  for (const auto &[e, count] : edge_count) {
    if (count == 2) continue;
    REQUIRE(count == 1);
    REQUIRE(boundary_edges.count(e) == 1);
  }
}

std::vector<double> layer_thicknesses(const std::vector<double> &axis) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < axis.size(); ++i) out.push_back(axis[i + 1] - axis[i]);
  return out;
}

}  // namespace

TEST_CASE("generate hyper_cube") {
  Mesh m = generate({GridName::kHyperCube, {0.0, 1.0}});
  REQUIRE(m.dim == 1);
  REQUIRE(m.n_cells() == 1);
  CHECK(m.nodes[0].x == 0.0);
  CHECK(m.nodes[1].x == 1.0);
  REQUIRE(m.faces.size() == 2);
  CHECK(m.faces[0].boundary_id == 0);
  CHECK(m.nodes[static_cast<std::size_t>(m.faces[0].nodes[0])].x == 0.0);
  CHECK(m.nodes[static_cast<std::size_t>(m.faces[1].nodes[0])].x == 1.0);
}

TEST_CASE("generate hyper_shell") {
  Mesh m = generate({GridName::kHyperShell, {1.0, 2.0}});
  CHECK(m.n_cells() == 8);
  for (const auto &f : m.faces) {
    if (f.boundary_id != 0) continue;
    for (int k = 0; k < 2; ++k)
      CHECK_THAT(m.nodes[static_cast<std::size_t>(f.nodes[static_cast<std::size_t>(k)])].norm(),
                 Catch::Matchers::WithinAbs(1.0, 1e-14));
  }
  check_conforming(m);
}

TEST_CASE("generate hyper_rectangle") {
  Mesh m = generate({GridName::kHyperRectangle, {0.0, 0.0, 1.0, 1.0}});
  REQUIRE(m.n_cells() == 1);
  CHECK_THAT(quad_area(m, 0), Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK(m.n_boundary_ids == 4);
}

TEST_CASE("generate hemisphere_cylinder_shell") {
  Mesh m = generate({GridName::kHemisphereCylinderShell, {0.1, 0.4, 1.0, 1.3}});
  CHECK(m.n_cells() == 5);
  CHECK(m.n_boundary_ids == 6);
  check_conforming(m);
  Mesh r = refine_global(m, 3);
  check_conforming(r);
  // nose nodes of the refined inner boundary stay on the exact circle
  for (const auto &f : r.faces) {
    if (f.boundary_id != 0 && f.boundary_id != 1) continue;
    for (int k = 0; k < 2; ++k) {
      Vec2 p = r.nodes[static_cast<std::size_t>(f.nodes[static_cast<std::size_t>(k)])];
      if (p.y < -1e-9)  // strictly on the nose arc, not the aft corners
        CHECK_THAT(p.norm(), Catch::Matchers::WithinAbs(0.1, 1e-13));
    }
  }
}

TEST_CASE("invalid specs") {
  CHECK_THROWS_AS(generate({GridName::kHyperShell, {2.0, 1.0}}), Error);
  CHECK_THROWS_AS(generate({GridName::kHyperCube, {0.0, 1.0, 2.0}}), Error);
  CHECK_THROWS_AS(generate({GridName::kHyperRectangle, {0, 0, -1, 1}}), Error);
}

TEST_CASE("refine_global") {
  Mesh cube = generate({GridName::kHyperCube, {0.0, 1.0}});
  Mesh fine = refine_global(cube, 3);
  REQUIRE(fine.n_cells() == 8);
  CHECK_THAT(fine.nodes[1].x - fine.nodes[0].x, Catch::Matchers::WithinAbs(1.0 / 8.0, 1e-15));

  Mesh shell = generate({GridName::kHyperShell, {1.0, 2.0}});
  Mesh shell1 = refine_global(shell, 1);
  CHECK(shell1.n_cells() == 32);
  for (const auto &f : shell1.faces)
    if (f.boundary_id == 0)
      for (int k = 0; k < 2; ++k)
        CHECK_THAT(shell1.nodes[static_cast<std::size_t>(f.nodes[static_cast<std::size_t>(k)])].norm(),
                   Catch::Matchers::WithinAbs(1.0, 1e-14));
  check_conforming(shell1);

  Mesh same = refine_global(shell, 0);
  REQUIRE(same.n_cells() == shell.n_cells());
  for (int i = 0; i < shell.n_nodes(); ++i) {
    CHECK(same.nodes[static_cast<std::size_t>(i)].x == shell.nodes[static_cast<std::size_t>(i)].x);
    CHECK(same.nodes[static_cast<std::size_t>(i)].y == shell.nodes[static_cast<std::size_t>(i)].y);
  }
}

TEST_CASE("cell count multiplies by 2^d per cycle") {
  Mesh rect = generate({GridName::kHyperRectangle, {0, 0, 2, 1}});
  CHECK(refine_global(rect, 1).n_cells() == 4);
  CHECK(refine_global(rect, 3).n_cells() == 64);
}

TEST_CASE("refine_boundary grades the interval") {
  Mesh m = refine_global(generate({GridName::kHyperCube, {0.0, 1.0}}), 3);
  Mesh b = refine_boundary(m, 0, 3);
  auto th = layer_thicknesses(b.axis0);
  REQUIRE(th.size() == 11);
  CHECK_THAT(th[0], Catch::Matchers::WithinAbs(1.0 / 64, 1e-15));
  CHECK_THAT(th[1], Catch::Matchers::WithinAbs(1.0 / 64, 1e-15));
  CHECK_THAT(th[2], Catch::Matchers::WithinAbs(1.0 / 32, 1e-15));
  CHECK_THAT(th[3], Catch::Matchers::WithinAbs(1.0 / 16, 1e-15));
  CHECK_THAT(th[4], Catch::Matchers::WithinAbs(1.0 / 8, 1e-15));
}

TEST_CASE("refine_boundary grades the shell radially") {
  Mesh shell = generate({GridName::kHyperShell, {1.0, 2.0}});
  Mesh b = refine_boundary(shell, 0, 2);
  auto th = layer_thicknesses(b.axis0);
  REQUIRE(th.size() == 3);
  CHECK_THAT(th[0], Catch::Matchers::WithinAbs(0.25, 1e-15));
  CHECK_THAT(th[1], Catch::Matchers::WithinAbs(0.25, 1e-15));
  CHECK_THAT(th[2], Catch::Matchers::WithinAbs(0.5, 1e-15));
  check_conforming(b);

  CHECK(refine_boundary(shell, 0, 0).n_cells() == shell.n_cells());
}

TEST_CASE("refine_boundary rejects non-extremal ids") {
  Mesh shell = generate({GridName::kHyperShell, {1.0, 2.0}});
  CHECK_THROWS_AS(refine_boundary(shell, 7, 1), Error);
}

TEST_CASE("transform_rigid") {
  Mesh shell = refine_global(generate({GridName::kHyperShell, {1.0, 2.0}}), 2);

  Mesh same = transform_rigid(shell, 0.0, {0, 0}, {0, 0});
  for (int i = 0; i < shell.n_nodes(); ++i)
    CHECK((same.nodes[static_cast<std::size_t>(i)] - shell.nodes[static_cast<std::size_t>(i)]).norm() == 0.0);

  Mesh rot = transform_rigid(shell, kPi / 2, {0, 0}, {0, 0});
  // node (1,0) exists on the inner ring; it should land on (0,1)
  bool found = false;
  for (int i = 0; i < shell.n_nodes(); ++i) {
    Vec2 p = shell.nodes[static_cast<std::size_t>(i)];
    if ((p - Vec2{1, 0}).norm() < 1e-12) {
      found = true;
      CHECK_THAT((rot.nodes[static_cast<std::size_t>(i)] - Vec2{0, 1}).norm(),
                 Catch::Matchers::WithinAbs(0.0, 1e-14));
    }
  }
  REQUIRE(found);

  // composition equals the single equivalent transform
  Mesh two = transform_rigid(transform_rigid(shell, 0.3, {0.5, -0.2}, {0.1, 0.4}), 0.7, {-0.1, 0.3}, {1.0, 0.0});
  Affine2 combined = Affine2::rigid(0.7, {-0.1, 0.3}, {1.0, 0.0})
                         .compose(Affine2::rigid(0.3, {0.5, -0.2}, {0.1, 0.4}));
  for (int i = 0; i < shell.n_nodes(); ++i) {
    Vec2 expect = combined.apply(shell.nodes[static_cast<std::size_t>(i)]);
    CHECK_THAT((two.nodes[static_cast<std::size_t>(i)] - expect).norm(), Catch::Matchers::WithinAbs(0.0, 1e-12));
  }

  // pairwise distances preserved
  for (int i = 0; i < shell.n_nodes(); i += 7)
    for (int j = i + 1; j < shell.n_nodes(); j += 13) {
      double d0 = (shell.nodes[static_cast<std::size_t>(i)] - shell.nodes[static_cast<std::size_t>(j)]).norm();
      double d1 = (two.nodes[static_cast<std::size_t>(i)] - two.nodes[static_cast<std::size_t>(j)]).norm();
      CHECK_THAT(d1, Catch::Matchers::WithinRel(d0, 1e-12));
    }

  CHECK_THROWS_AS(transform_rigid(generate({GridName::kHyperCube, {0, 1}}), 0.1, {0, 0}, {0, 0}), Error);
}

TEST_CASE("boundary_faces normals") {
  Mesh sq = generate({GridName::kHyperRectangle, {0, 0, 1, 1}});
  auto right = boundary_faces(sq, 2);
  REQUIRE(right.size() == 1);
  CHECK_THAT(right[0].normal.x, Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK_THAT(right[0].normal.y, Catch::Matchers::WithinAbs(0.0, 1e-15));

  Mesh shell = refine_global(generate({GridName::kHyperShell, {1.0, 2.0}}), 1);
  for (const auto &f : boundary_faces(shell, 0)) {
    // inner boundary: outward normal of the domain points toward the center
    CHECK(f.normal.dot(f.center) < 0.0);
    CHECK_THAT(f.normal.norm(), Catch::Matchers::WithinAbs(1.0, 1e-14));
  }

  Mesh line = generate({GridName::kHyperCube, {0, 1}});
  auto left = boundary_faces(line, 0);
  REQUIRE(left.size() == 1);
  CHECK(left[0].normal.x == -1.0);

  CHECK_THROWS_AS(boundary_faces(sq, 9), Error);
}

TEST_CASE("shell polygonal area converges at order 2") {
  const double exact = kPi * (4.0 - 1.0);
  Mesh shell = generate({GridName::kHyperShell, {1.0, 2.0}});
  double prev_err = -1.0;
  for (int k = 1; k <= 4; ++k) {
    double err = std::abs(total_area(refine_global(shell, k)) - exact);
    if (prev_err > 0.0) {
      double rate = std::log2(prev_err / err);
      CHECK(rate > 1.8);
      CHECK(rate < 2.2);
    }
    prev_err = err;
  }
}

TEST_CASE("manifold fidelity after many refinements") {
  Mesh m = refine_boundary(refine_global(generate({GridName::kHyperShell, {1.0, 2.0}}), 3), 0, 2);
  check_conforming(m);
  for (const auto &f : m.faces)
    if (f.boundary_id == 0)
      for (int k = 0; k < 2; ++k)
        CHECK_THAT(m.nodes[static_cast<std::size_t>(f.nodes[static_cast<std::size_t>(k)])].norm(),
                   Catch::Matchers::WithinAbs(1.0, 1e-12));
}
