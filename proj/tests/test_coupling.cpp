#include <doctest.h>

#include "support.hpp"

using namespace bandedge;
using testing::code_of;
using testing::pt;

namespace {

// A minima set at hand-picked points, for coupling matrices of order m > 1
// (real potentials always have a single first-band minimum at theta = 0).
struct Synthetic {
  MinimaSet minima;
  std::vector<BlochState> states;
};

Synthetic synthetic(const BlochModel& model, const std::vector<double>& thetas) {
  Synthetic s;
  s.minima.cell = model.grid.cell();
  for (double t : thetas) {
    BandMinimum m;
    m.theta = pt(t);
    s.minima.minima.push_back(m);
    s.states.push_back(bloch_eigenfunction(model, pt(t)));
  }
  return s;
}

Eigen::MatrixXcd rephased(const Eigen::MatrixXcd& a, const Eigen::VectorXd& alpha) {
  Eigen::MatrixXcd out = a;
  for (Eigen::Index k = 0; k < a.rows(); ++k)
    for (Eigen::Index l = 0; l < a.cols(); ++l)
      out(k, l) *= std::polar(1.0, alpha(k) - alpha(l));
  return out;
}

Eigen::MatrixXcd diag(std::initializer_list<double> v) {
  Eigen::VectorXcd d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

}  // namespace

TEST_CASE("classification") {
  CHECK(classify_definiteness(diag({1.0, 2.0})) == Definiteness::PositiveDefinite);
  CHECK(classify_definiteness(diag({-1.0, -0.5})) == Definiteness::NegativeDefinite);
  CHECK(classify_definiteness(diag({1.0, -1.0})) == Definiteness::Indefinite);
  CHECK(classify_definiteness(diag({1.0, 1e-12})) == Definiteness::NumericallySingular);
  CHECK(classify_definiteness(diag({1e-12}), 1e-8, 1.0) == Definiteness::NumericallySingular);
  CHECK(classify_definiteness(diag({1e-12})) == Definiteness::PositiveDefinite);
  // Only the Hermitian part counts: [[1, 5], [-5, 1]] has Hermitian part I.
  Eigen::MatrixXcd skew(2, 2);
  skew << 1.0, 5.0, -5.0, 1.0;
  CHECK(classify_definiteness(skew) == Definiteness::PositiveDefinite);
  CHECK(hermitian_part_eigenvalues(skew)(0) == doctest::Approx(1.0));
  CHECK(to_string(Definiteness::NumericallySingular) == "numerically-singular");
  CHECK(code_of([] { (void)hermitian_part_eigenvalues(Eigen::MatrixXcd(2, 3)); }) == ErrorCode::SizeMismatch);
}

TEST_CASE("free background: A(0) is the integral of f") {
  const auto f = testing::default_site();
  // On W = 0 the ground state at theta = 0 is phi = 1, so A is the grid
  // quadrature of f itself, and that quadrature converges fast for bumps.
  const auto a = coupling_for_model(testing::free_model(256, f), CouplingOptions{17});
  REQUIRE(a.order() == 1);
  CHECK(std::abs(a.entries(0, 0).real() - cell_integral(f, 256)) <= 1e-12);
  const double oracle =
      testing::adaptive_simpson([](double x) { return testing::bump_formula(x, -0.25, 0.15, 1.0); }, -0.4, -0.1, 1e-14) +
      testing::adaptive_simpson([](double x) { return testing::bump_formula(x, 0.25, 0.15, -0.5); }, 0.1, 0.4, 1e-14);
  CHECK(std::abs(a.entries(0, 0).real() - oracle) <= 1e-8);
  CHECK(a.entries(0, 0).imag() == 0.0);
  CHECK(a.definiteness == Definiteness::PositiveDefinite);
}

TEST_CASE("balanced site on the free background is numerically singular") {
  const auto f = build_single_site({Bump{pt(-0.25), 0.15, 1.0}, Bump{pt(0.25), 0.15, -1.0}}, 1);
  const auto a = coupling_for_model(testing::free_model(32, f), CouplingOptions{17});
  CHECK(a.definiteness == Definiteness::NumericallySingular);
  CHECK(a.scale > 0.0);
  CHECK(code_of([&] { (void)lambda_threshold_scan(testing::free_model(32, f), {0.0}, CouplingOptions{17}); }) ==
        ErrorCode::NotDefiniteAtZero);
}

TEST_CASE("coupling matrix is Hermitian and rephasing-invariant") {
  const auto model = testing::default_model(32, 3.0);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  for (const auto& thetas : std::vector<std::vector<double>>{{0.0}, {-0.9, 0.4}, {-2.0, 0.1, 1.3}}) {
    const auto s = synthetic(model, thetas);
    const auto a = coupling_matrix(model.site, s.minima, s.states);
    CHECK(a.order() == static_cast<Eigen::Index>(thetas.size()));
    CHECK((a.entries - a.entries.adjoint()).norm() <= 1e-14 * a.entries.norm());
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd alpha(a.order());
      for (Eigen::Index k = 0; k < a.order(); ++k) alpha(k) = u(rng);
      // Rephase the eigenfunctions themselves and recompute.
      auto states = s.states;
      for (Eigen::Index k = 0; k < a.order(); ++k) states[static_cast<std::size_t>(k)].values *= std::polar(1.0, alpha(k));
      const auto b = coupling_matrix(model.site, s.minima, states);
      CHECK((b.entries - rephased(a.entries, alpha)).norm() <= 1e-13 * (1 + a.entries.norm()));
      CHECK((b.hermitian_eigenvalues - a.hermitian_eigenvalues).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(b.definiteness == a.definiteness);
    }
  }
}

TEST_CASE("linearity in the single site") {
  const auto model = testing::default_model(32, 1.0);
  const auto s = synthetic(model, {0.0, 1.1});
  const auto f = build_single_site({Bump{pt(-0.25), 0.15, 1.0}}, 1);
  const auto g = build_single_site({Bump{pt(0.2), 0.2, -0.7}}, 1);
  const auto fg = build_single_site({Bump{pt(-0.25), 0.15, 1.0}, Bump{pt(0.2), 0.2, -0.7}}, 1);
  const auto af = coupling_matrix(f, s.minima, s.states).entries;
  const auto ag = coupling_matrix(g, s.minima, s.states).entries;
  const auto afg = coupling_matrix(fg, s.minima, s.states).entries;
  CHECK((afg - af - ag).norm() <= 1e-13);
  const auto a3 = coupling_matrix(f.scaled(-3.0), s.minima, s.states).entries;
  CHECK((a3 + 3.0 * af).norm() <= 1e-13);
}

TEST_CASE("order one: the class is the sign of the weighted integral") {
  const auto model = testing::default_model(32);
  const auto pos = build_single_site({Bump{pt(0.0), 0.3, 1.0}}, 1);
  const auto a = coupling_for_model(BlochModel{model.grid, model.background, pos, 0.0, model.config}, CouplingOptions{33});
  CHECK(a.definiteness == Definiteness::PositiveDefinite);
  const auto b = coupling_for_model(BlochModel{model.grid, model.background, pos.scaled(-1), 0.0, model.config},
                                    CouplingOptions{33});
  CHECK(b.definiteness == Definiteness::NegativeDefinite);
  CHECK(b.entries(0, 0).real() == doctest::Approx(-a.entries(0, 0).real()).epsilon(1e-12));
}

TEST_CASE("A(0) converges under grid refinement") {
  std::vector<double> a11;
  for (int n : {32, 64, 128, 256})
    a11.push_back(coupling_for_model(testing::default_model(n), CouplingOptions{17}).entries(0, 0).real());
  const double limit = (4.0 * a11[3] - a11[2]) / 3.0;
  CHECK(std::abs(a11[3] - limit) <= 1e-6);
  CHECK(std::abs(a11[2] - a11[1]) > std::abs(a11[3] - a11[2]));
}

TEST_CASE("contracts of coupling_matrix") {
  const auto model = testing::default_model(16, 1.0);
  const auto s = synthetic(model, {0.0, 0.5});
  SUBCASE("count mismatch") {
    auto states = s.states;
    states.pop_back();
    CHECK(code_of([&] { (void)coupling_matrix(model.site, s.minima, states); }) == ErrorCode::MismatchedModel);
  }
  SUBCASE("different models") {
    auto states = s.states;
    states[1] = bloch_eigenfunction(model.with_lambda(2.0), pt(0.5));
    CHECK(code_of([&] { (void)coupling_matrix(model.site, s.minima, states); }) == ErrorCode::MismatchedModel);
  }
  SUBCASE("wrong point") {
    auto states = s.states;
    states[1] = bloch_eigenfunction(model, pt(0.6));
    CHECK(code_of([&] { (void)coupling_matrix(model.site, s.minima, states); }) == ErrorCode::MismatchedModel);
  }
  SUBCASE("minima of another model") {
    auto minima = s.minima;
    minima.model = model.with_lambda(0.0);
    CHECK(code_of([&] { (void)coupling_matrix(model.site, minima, s.states); }) == ErrorCode::MismatchedModel);
  }
  SUBCASE("point equal modulo the zone is accepted") {
    auto minima = s.minima;
    minima.minima[1].theta = pt(0.5 + 2 * std::numbers::pi);
    CHECK(coupling_matrix(model.site, minima, s.states).order() == 2);
  }
  SUBCASE("empty") {
    CHECK(code_of([&] { (void)coupling_matrix(model.site, MinimaSet{}, {}); }) == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("threshold scan") {
  const auto model = testing::default_model(32);
  SUBCASE("ladder (0)") {
    const auto scan = lambda_threshold_scan(model, {0.0}, CouplingOptions{33});
    REQUIRE(scan.entries.size() == 1);
    CHECK(scan.lambda0 == 0.0);
    CHECK(scan.envelope_constant == 0.0);
    CHECK(scan.class_at_zero == Definiteness::PositiveDefinite);
    CHECK(scan.c0 == scan.entries[0].margin);
  }
  SUBCASE("positive class persists up to lambda_0 > 0") {
    std::vector<double> ladder;
    for (int k = 0; k <= 12; ++k) ladder.push_back(2.0 * k);
    const auto scan = lambda_threshold_scan(model, ladder, CouplingOptions{33});
    CHECK(scan.class_at_zero == Definiteness::PositiveDefinite);
    CHECK(scan.reference_coupling == 1.0);
    CHECK(scan.lambda0 > 0.0);
    CHECK(scan.class_constant_to_lambda0);
    CHECK(scan.envelope_constant > 0.0);
    CHECK_FALSE(scan.order_change);
    // The envelope bounds every ladder step, and margins stay above c0/2 to lambda_0.
    for (const auto& e : scan.entries) {
      const double dist = (e.coupling.hermitian_eigenvalues - scan.entries[0].coupling.hermitian_eigenvalues)
                              .cwiseAbs()
                              .maxCoeff();
      CHECK(dist <= scan.envelope_constant * e.lambda + 1e-15);
      if (e.lambda <= scan.lambda0) CHECK(e.margin >= 0.5 * scan.c0);
    }
  }
  SUBCASE("negated site flips the class and the reference extreme") {
    auto neg = model;
    neg.site = model.site.scaled(-1.0);
    const auto scan = lambda_threshold_scan(neg, {0.0, 1.0, 2.0}, CouplingOptions{33});
    CHECK(scan.class_at_zero == Definiteness::NegativeDefinite);
    CHECK(scan.reference_coupling == 3.0);
    CHECK(scan.c0 > 0.0);
    CHECK(scan.lambda0 == 2.0);
  }
  SUBCASE("explicit reference") {
    const auto scan = lambda_threshold_scan(model, {0.0, 1.0}, CouplingOptions{33}, ReferenceExtreme::Upper);
    CHECK(scan.reference_coupling == 3.0);
  }
  SUBCASE("ladder contracts") {
    CHECK(code_of([&] { (void)lambda_threshold_scan(model, {0.5, 1.0}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { (void)lambda_threshold_scan(model, {0.0, 2.0, 1.0}); }) == ErrorCode::InvalidArgument);
  }
}
