#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "snl/error.hpp"
#include "snl/oracle.hpp"
#include "snl/synthdata.hpp"

using namespace snl;

TEST_CASE("reweighting factor values") {
  CHECK(reweight_factor(0.0, 1.0) == doctest::Approx(1.4621171572600098).epsilon(1e-14));
  CHECK(reweight_factor(1.0, 1.0) == doctest::Approx(1.8591409142295225).epsilon(1e-14));
  for (double z : {-5.0, 0.0, 3.0}) CHECK(reweight_factor(z, 0.0) == 1.0);
  CHECK(reweight_factor(50.0, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
}

TEST_CASE("relative error") {
  const std::vector<double> a{3.0, 4.0}, b{3.0, 4.0}, z{0.0, 0.0};
  CHECK(relative_error(a, b) == 0.0);
  CHECK(relative_error(z, z) == 0.0);
  CHECK(relative_error(a, z) == doctest::Approx(1.0));
  CHECK_THROWS_AS(relative_error(a, std::vector<double>{1.0}), DimensionMismatch);
}

TEST_CASE("finite-difference checks per family") {
  CHECK(fd_gradient_check(Family::Linear, 100, 1e-6).pass);
  CHECK(fd_gradient_check(Family::DLN2, 100, 1e-5).pass);
  const auto mlp = fd_gradient_check(Family::MLP, 100, 1e-5);
  CHECK(mlp.pass);
  CHECK(mlp.n == 100);
  CHECK_THROWS_AS(fd_gradient_check(Family::Linear, 1, 0.0), InvalidArgument);
}

TEST_CASE("a sign-flipped gradient fails the finite-difference check") {
  auto flipped = [](const Model& m, std::span<const double> x, std::int64_t t) {
    auto g = grad_decomp(m, x, t).grad;
    for (auto& v : g) v = -v;
    return g;
  };
  CHECK_FALSE(fd_gradient_check(Family::DLN2, 20, 1e-5, 1, flipped).pass);
}

TEST_CASE("reports are reproducible") {
  const auto a = jsam_identity_check(50);
  const auto b = jsam_identity_check(50);
  CHECK(a.max_rel_err == b.max_rel_err);
  CHECK(a.pass);
  CHECK(a.max_rel_err <= 1e-10);
}

TEST_CASE("monotonicity check") {
  const std::vector<double> grid{0.1, 1.0, 3.0};
  const auto r = lemma_monotonicity_check(grid, -10.0, 10.0, 200);
  CHECK(r.pass);
  CHECK(r.n == 600);
  const std::vector<double> bad{0.0};
  CHECK_THROWS_AS(lemma_monotonicity_check(bad), InvalidArgument);
}

TEST_CASE("large-rho limit on the toy data") {
  ToyDataConfig c;
  const auto d = sample_toy(c).train;
  CHECK(asymptotic_sam_check(d, 1e4).pass);
  CHECK(asymptotic_scale_spread_check(d, 1e4).pass);
  CHECK(first_coordinate_check(d, 0.4).pass);
  CHECK_FALSE(first_coordinate_check(d, 1.0).pass);
}

TEST_CASE("ridge limit") {
  const auto r = ridge_limit_check(20, 5, 1e8);
  CHECK(r.pass);
  CHECK(r.max_rel_err <= 1e-6);
  // A small lambda is far from the limit.
  CHECK_FALSE(ridge_limit_check(20, 5, 1e-2).pass);
}

TEST_CASE("suite passes and reports serialize") {
  const auto reports = run_oracle_suite();
  CHECK(reports.size() >= 10);
  for (const auto& r : reports) {
    CAPTURE(r.name);
    CHECK(r.pass);
  }
  std::ostringstream os;
  print_reports(os, reports);
  CHECK(os.str().find("PASS") != std::string::npos);

  const auto path = std::filesystem::temp_directory_path() / "snl_oracle_test.json";
  write_reports_json(path, reports);
  std::ifstream is(path);
  const auto j = nlohmann::json::parse(is);
  REQUIRE(j.is_array());
  CHECK(j.size() == reports.size());
  CHECK(j[0].contains("max_rel_err"));
}
