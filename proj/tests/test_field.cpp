#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "imcf/field.hpp"
#include "oracles.hpp"

using namespace imcf;

namespace {

GraphField from_scalar(const Grid& g, double (*f)(double, double)) {
  GraphField out = make_field(g);
  for (int i = 0; i < g.n_real; ++i) {
    out.phi[i] = f(g.point[i].x0, g.point[i].x1);
    out.u[i] = std::exp(out.phi[i]);
  }
  apply_neumann(out, g);
  return out;
}

}  // namespace

TEST(Neumann, LineGhostsMirrorAcrossTheEndpoints) {
  const Grid g = build_grid({1, 1.0, 9, 0});
  GraphField f = make_field(g);
  for (int i = 0; i < g.n_real; ++i) f.phi[i] = 0.1 * i * i;
  apply_neumann(f, g);
  EXPECT_EQ(f.phi[9], f.phi[1]);    // left ghost
  EXPECT_EQ(f.phi[10], f.phi[7]);   // right ghost
  // centered conormal derivative vanishes at both endpoints
  EXPECT_EQ(f.phi[g.jp[0]] - f.phi[g.jm[0]], f.phi[1] - f.phi[9]);
  EXPECT_EQ(f.phi[1] - f.phi[9], 0.0);
  EXPECT_EQ(f.phi[g.jp[8]] - f.phi[g.jm[8]], 0.0);
}

TEST(Neumann, PolarGhostRingCopiesTheBoundaryRing) {
  const Grid g = build_grid({2, 1.0, 8, 8});
  GraphField f = make_field(g);
  for (int i = 0; i < g.n_real; ++i) f.phi[i] = std::sin(0.3 * i);
  apply_neumann(f, g);
  for (int k = 0; k < 8; ++k) {
    EXPECT_EQ(f.phi[g.idx(8, k)], f.phi[g.idx(7, k)]);
    EXPECT_EQ(f.u[g.idx(8, k)], f.u[g.idx(7, k)]);
  }
}

TEST(Differentiate, ExactOnLineQuadratics) {
  const Grid g = build_grid({1, 1.0, 21, 0});
  GraphField f = from_scalar(g, [](double rho, double) {
    return 0.2 + 0.3 * rho + 0.15 * rho * rho;
  });
  const DifferentialPack p = differentiate(f, g);
  for (int i = 1; i + 1 < g.n_real; ++i) {  // mirror ghosts bend the endpoints
    const double rho = g.point[i].x0;
    EXPECT_NEAR(p.d0[i], 0.3 + 0.3 * rho, 1e-13);
    EXPECT_NEAR(p.h00[i], 0.3, 1e-11);
    EXPECT_NEAR(p.grad_sq[i], p.d0[i] * p.d0[i], 1e-16);
    EXPECT_NEAR(p.v[i], std::sqrt(1.0 - p.grad_sq[i]), 1e-16);
  }
}

TEST(Differentiate, RadialFieldHasNoAngularDerivatives) {
  const Grid g = build_grid({2, 1.0, 16, 16});
  GraphField f = from_scalar(g, [](double r, double) {
    return 0.1 * std::cos(M_PI * r * r);
  });
  const DifferentialPack p = differentiate(f, g);
  for (int i = 0; i < g.n_real; ++i) {
    EXPECT_EQ(p.d1[i], 0.0);
    EXPECT_EQ(p.h01[i], 0.0);
  }
}

TEST(Differentiate, ChartGradientUsesTheInverseMetric) {
  // phi linear in the radial chart coordinate: |D phi|^2 = (1 + r^2) a^2
  const Grid g = build_grid({2, 1.0, 32, 16});
  GraphField f = from_scalar(g, [](double r, double) { return 0.2 * r; });
  const DifferentialPack p = differentiate(f, g);
  for (int j = 1; j + 1 < g.spec.Nr; ++j) {
    const int i = g.idx(j, 3);
    const double r = g.point[i].x0;
    EXPECT_NEAR(p.d0[i], 0.2, 1e-13);
    EXPECT_NEAR(p.grad_sq[i], (1.0 + r * r) * 0.04, 1e-12);
  }
}

namespace {
constexpr double kAmp = 0.05;
double bump_phi(double r, double) { return kAmp * std::cos(M_PI * r * r); }
double bump_dphi(double r) { return -2.0 * M_PI * kAmp * r * std::sin(M_PI * r * r); }
double bump_ddphi(double r) {
  const double q = M_PI * r * r;
  return -2.0 * M_PI * kAmp * (std::sin(q) + 2.0 * M_PI * r * r * std::cos(q));
}
}  // namespace

TEST(Differentiate, CovariantHessianMatchesSymbolicRadialReduction) {
  // For phi = f(r): phi_rr = f'' + r/(1+r^2) f', phi_thth = r(1+r^2) f'.
  double worst[2] = {0.0, 0.0};
  int nr = 16;
  for (int l = 0; l < 2; ++l, nr *= 2) {
    const Grid g = build_grid({2, 1.0, nr, 16});
    const GraphField f = from_scalar(g, bump_phi);
    const DifferentialPack p = differentiate(f, g);
    for (int j = 0; j + 1 < g.spec.Nr; ++j) {  // boundary ring sees the mirror
      const int i = g.idx(j, 0);
      const double r = g.point[i].x0;
      const double h00_ref = bump_ddphi(r) + r / (1.0 + r * r) * bump_dphi(r);
      const double h11_ref = r * (1.0 + r * r) * bump_dphi(r);
      worst[l] = std::max(worst[l], std::fabs(p.h00[i] - h00_ref));
      worst[l] = std::max(worst[l], std::fabs(p.h11[i] - h11_ref));
    }
  }
  EXPECT_LT(worst[0], 0.05);
  const double order = std::log2(worst[0] / worst[1]);
  EXPECT_GE(order, 1.8) << "errors " << worst[0] << " -> " << worst[1];
  EXPECT_LE(order, 2.3) << "errors " << worst[0] << " -> " << worst[1];
}

TEST(Admissibility, ConstantGraphHasFullMargins) {
  for (int n : {1, 2}) {
    const Grid g = (n == 1) ? build_grid({1, 1.0, 17, 0})
                            : build_grid({2, 1.0, 8, 8});
    const GraphField f = make_constant(g, 0.3);
    const AdmissibilityReport rep = check_admissible(f, g);
    EXPECT_TRUE(rep.ok);
    EXPECT_DOUBLE_EQ(rep.min_spacelike_margin, 1.0);
    EXPECT_DOUBLE_EQ(rep.min_convexity, double(n));
    EXPECT_TRUE(rep.bad_nodes.empty());
  }
}

TEST(Admissibility, FlagsSlopeAtTheSpacelikeBound) {
  const Grid g = build_grid({1, 1.0, 41, 0});
  const GraphField f = from_scalar(g, [](double rho, double) {
    return 1.01 * rho;  // |D phi| = 1.01 away from the mirrored endpoints
  });
  const AdmissibilityReport rep = check_admissible(f, g);
  EXPECT_FALSE(rep.ok);
  EXPECT_LT(rep.min_spacelike_margin, 0.0);
  EXPECT_FALSE(rep.bad_nodes.empty());
  EXPECT_LE(rep.bad_nodes.size(), 32u);
}

TEST(Admissibility, FlagsLossOfMeanConvexity) {
  const Grid g = build_grid({1, 0.3, 31, 0});
  const GraphField f = from_scalar(g, [](double rho, double) {
    return -1.2 * rho * rho;  // spacelike, but D = 1 + (...)(-2.4) < 0
  });
  const AdmissibilityReport rep = check_admissible(f, g);
  EXPECT_FALSE(rep.ok);
  EXPECT_GT(rep.min_spacelike_margin, 0.0);
  EXPECT_LT(rep.min_convexity, 0.0);
}

TEST(Admissibility, FlagsNonFiniteEntries) {
  const Grid g = build_grid({1, 1.0, 9, 0});
  GraphField f = make_constant(g, 0.0);
  f.phi[4] = std::nan("");
  const AdmissibilityReport rep = check_admissible(f, g);
  EXPECT_FALSE(rep.ok);
}

TEST(Bump, ProfileScalesLinearlyWithBaseRadius) {
  const Grid g = build_grid({2, 1.0, 16, 16});
  const GraphField a = make_bump(g, 1.0, 0.05);
  const GraphField b = make_bump(g, 2.0, 0.05);
  for (int i = 0; i < g.n_real; ++i)
    EXPECT_NEAR(b.u[i], 2.0 * a.u[i], 1e-14);
  EXPECT_TRUE(check_admissible(a, g).ok);
  EXPECT_TRUE(check_admissible(b, g).ok);
}

TEST(Bump, FlatAtTheBoundaryToSecondOrder) {
  // du/dr vanishes at r = R, so the last two rings differ by O(h^2)
  double gap[2];
  int nr = 16;
  for (int l = 0; l < 2; ++l, nr *= 2) {
    const Grid g = build_grid({2, 1.0, nr, 16});
    const GraphField f = make_bump(g, 1.0, 0.05);
    gap[l] = std::fabs(f.phi[g.idx(nr - 1, 0)] - f.phi[g.idx(nr - 2, 0)]);
  }
  EXPECT_LT(gap[0], 2e-2);
  EXPECT_GT(std::log2(gap[0] / gap[1]), 1.7);
}

TEST(Bump, RejectsOversizedAmplitude) {
  const Grid g = build_grid({2, 1.0, 32, 32});
  EXPECT_THROW(make_bump(g, 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(make_bump(g, 1.0, 0.2), std::invalid_argument);
  EXPECT_NO_THROW(make_bump(g, 1.0, 0.05));
}

TEST(Bump, RejectsDegenerateParameters) {
  const Grid g = build_grid({2, 1.0, 16, 16});
  EXPECT_THROW(make_bump(g, 0.0, 0.05), std::invalid_argument);
  EXPECT_THROW(make_bump(g, -1.0, 0.05), std::invalid_argument);
  EXPECT_THROW(make_bump(g, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(make_bump(g, 1.0, -1.0), std::invalid_argument);
}
