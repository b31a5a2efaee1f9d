#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "geoxray/errors.hpp"
#include "geoxray/microlocal.hpp"
#include "geoxray/phantoms.hpp"

using namespace geoxray;

namespace {

ForwardOperator flat_constant(double c0, int n = 64) {
  const Grid2D g(n);
  return build_operator(make_speed(SpeedProfile::unit, g), ScalarField2D(g, c0), make_rayset(16, 8));
}

ConjugatePairRecord chord_pair(Point2 a, Point2 b) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const Point2 v{(b.x - a.x) / len, (b.y - a.y) / len};
  ConjugatePairRecord rec;
  rec.p1 = {a, v};
  rec.p2 = {b, v};
  return rec;
}

ForwardOperator census_operator(SpeedProfile speed, AttenuationKind att) {
  const Grid2D g(96);
  return build_operator(make_speed(speed, g), make_attenuation(att, g), make_rayset(96, 48));
}

}  // namespace

TEST_SUITE("microlocal") {
  TEST_CASE("Q without attenuation") {
    const auto op = flat_constant(0.0);
    const auto q = build_Q(op, chord_pair({-0.5, 0.1}, {0.4, 0.1}));
    for (const auto& row : q)
      for (double v : row) CHECK(v == 1.0);
    CHECK(determinant(q) == 0.0);
    CHECK(classify(q) == Stability::unstable);
  }

  TEST_CASE("constant attenuation closed form") {
    CHECK(det_q_constant_attenuation(1.0, 1.0, 1.0) == doctest::Approx(-0.3181).epsilon(1e-4));
    CHECK(det_q_constant_attenuation(1.0, 1.0, 1.0) == doctest::Approx((std::exp(-2.0) - 1.0) * std::exp(-1.0)));
    {
      const auto q = build_Q(flat_constant(1.0), chord_pair({-0.5, 0.0}, {0.5, 0.0}));
      CHECK(std::abs(determinant(q) - det_q_constant_attenuation(1.0, 1.0, 1.0)) < 1e-6);
      CHECK(classify(q) == Stability::stable);
    }
    // off-center chord: y = 0.6, half-length 0.8
    const double c0 = 0.5;
    const auto q = build_Q(flat_constant(c0), chord_pair({-0.3, 0.6}, {0.3, 0.6}));
    CHECK(std::abs(determinant(q) - det_q_constant_attenuation(c0, 0.6, 1.0)) < 1e-6);
  }

  TEST_CASE("relabeling the pair leaves det Q unchanged") {
    const auto op = census_operator(SpeedProfile::c1, AttenuationKind::gaussian_bump);
    const auto pairs = census(op);
    REQUIRE(!pairs.empty());
    for (std::size_t k = 0; k < pairs.size(); k += pairs.size() / 7 + 1) {
      const auto& rec = pairs[k].pair;
      ConjugatePairRecord swapped;
      swapped.p1 = {rec.p2.x, {-rec.p2.v.x, -rec.p2.v.y}};
      swapped.p2 = {rec.p1.x, {-rec.p1.v.x, -rec.p1.v.y}};
      CHECK(determinant(build_Q(op, swapped)) == doctest::Approx(pairs[k].det_q).epsilon(1e-12));
    }
    for (const auto& r : pairs) CHECK(r.det_q <= 1e-12);
  }

  TEST_CASE("census") {
    CHECK(census(census_operator(SpeedProfile::unit, AttenuationKind::zero)).empty());

    const auto c1 = census(census_operator(SpeedProfile::c1, AttenuationKind::zero));
    REQUIRE(!c1.empty());
    for (const auto& r : c1) {
      CHECK(std::abs(r.det_q) < 1e-6);
      CHECK(r.classification == Stability::unstable);
      CHECK(r.multiplicity <= 2);
      CHECK(r.pair.t1 < r.pair.t2);
    }
    const auto c2 = census(census_operator(SpeedProfile::c2, AttenuationKind::zero));
    int best = 0;
    for (const auto& r : c2) best = std::max(best, r.multiplicity);
    CHECK(best >= 3);
  }

  TEST_CASE("multiplicities survive step halving") {
    const auto op = census_operator(SpeedProfile::c2, AttenuationKind::zero);
    const auto a = multiplicities(op);
    CensusOptions fine;
    fine.dt = op.dt() / 2;
    const auto b = multiplicities(op, fine);
    REQUIRE(a.size() == b.size());
    std::size_t same = 0;
    for (std::size_t k = 0; k < a.size(); ++k) same += a[k] == b[k];
    CHECK(same >= 0.95 * a.size());
  }

  TEST_CASE("census csv") {
    const auto reports = census(census_operator(SpeedProfile::c1, AttenuationKind::zero));
    const auto path = std::filesystem::temp_directory_path() / "geoxray_census_test.csv";
    write_census_csv(reports, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "ray_id,beta,alpha,t1,t2,detQ,multiplicity,bdot_ratio");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == reports.size());
    std::filesystem::remove(path);
  }

  TEST_CASE("artifact metrics") {
    const Grid2D g(101);  // spacing 0.02: a 0.8 shift is 40 cells
    const auto truth = make_phantom(PhantomSpec::bump({-0.4, 0.0}), g);
    const auto mirror = make_phantom(PhantomSpec::bump({0.4, 0.0}), g);
    const auto mask = support_region(mirror);

    auto m = artifact_metrics(truth, truth, mask);
    CHECK(m.amp_ratio_true == doctest::Approx(1.0));
    CHECK(m.artifact_to_signal < 1e-12);  // Gaussian tail only

    m = artifact_metrics(ScalarField2D(g), truth, mask);
    CHECK(m.amp_ratio_true == 0.0);
    CHECK(m.artifact_to_signal == 0.0);

    ScalarField2D recon(g);
    for (std::size_t k = 0; k < recon.raw().size(); ++k)
      recon.raw()[k] = 0.5 * truth.raw()[k] + 0.5 * mirror.raw()[k];
    m = artifact_metrics(recon, truth, mask);
    CHECK(m.amp_ratio_true == doctest::Approx(0.5).epsilon(1e-9));
    // the two thresholded regions can differ by a boundary node
    CHECK(m.artifact_to_signal == doctest::Approx(1.0).epsilon(1e-4));

    CHECK_THROWS_AS(artifact_metrics(recon, truth, ScalarField2D(g)), ConfigError);
    CHECK_THROWS_AS(artifact_metrics(recon, ScalarField2D(g), mask), ConfigError);
    CHECK_THROWS_AS(artifact_metrics(recon, truth, ScalarField2D(g, 2.0)), ConfigError);
  }

  TEST_CASE("masks") {
    const Grid2D g(101);
    const auto disk = mask_from_points(g, {{0.0, 0.0}}, 3.5);
    double cells = 0.0;
    for (double v : disk.raw()) cells += v;
    CHECK(cells == 37.0);  // lattice points with i^2 + j^2 <= 12
    const auto m = make_speed(SpeedProfile::c3, Grid2D(128));
    const auto truth = make_phantom(PhantomSpec::bump({-0.75, 0.0}), m.grid());
    const auto region = support_region(truth);
    const auto locus = locus_mask(m, {{-0.75, 0.0}}, 120, 3.0, region);
    double count = 0.0, overlap = 0.0;
    for (std::size_t k = 0; k < locus.raw().size(); ++k) {
      count += locus.raw()[k];
      overlap += locus.raw()[k] * region.raw()[k];
    }
    CHECK(count > 0.0);
    CHECK(overlap == 0.0);
    const auto upper = locus_mask(m, {{-0.75, 0.0}}, 120, 3.0, region, [](Point2 q) { return q.y > 0; });
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 128; ++i) CHECK(upper.at(i, j) == 0.0);
  }
}
