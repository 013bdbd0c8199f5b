#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "imcf/rescale.hpp"
#include "oracles.hpp"

using namespace imcf;

TEST(RadialSolution, MatchesIndependentOdeIntegration) {
  // d phi / dt = -(1/n) e^{-alpha phi}, phi(0) = c
  struct Case {
    double alpha;
    int n;
    double c, T;
  };
  const Case cases[] = {
      {-1.0, 2, 0.0, 2.0},   {-1.0, 1, 0.0, 2.0}, {-0.5, 2, 0.3, 3.0},
      {0.0, 2, 0.0, 2.0},    {-2.0, 1, -0.2, 1.5},
  };
  for (const Case& k : cases) {
    const auto rhs = [&](double, double phi) {
      return -std::exp(-k.alpha * phi) / k.n;
    };
    for (double frac : {0.25, 0.5, 1.0}) {
      const double t = frac * k.T;
      const double ode = oracle::rk4(rhs, k.c, 0.0, t, 20000);
      EXPECT_NEAR(exact_radial_phi(t, k.c, k.alpha, k.n), ode, 1e-10)
          << "alpha=" << k.alpha << " n=" << k.n << " t=" << t;
    }
  }
}

TEST(RadialSolution, FrozenEndpointValues) {
  EXPECT_NEAR(exact_radial_phi(2.0, 0.0, -1.0, 2), -0.6931471805599453, 1e-15);
  EXPECT_NEAR(exact_radial_phi(2.0, 0.0, -1.0, 1), -1.0986122886681098, 1e-15);
  EXPECT_DOUBLE_EQ(exact_radial_phi(2.0, 0.0, 0.0, 2), -1.0);
  EXPECT_DOUBLE_EQ(theta(2.0, 0.0, -1.0, 2), 0.5);
  EXPECT_DOUBLE_EQ(theta(2.0, 0.0, 0.0, 2), 0.36787944117144233);
}

TEST(RadialSolution, MonotoneInTimeAndInTheConstant) {
  for (double alpha : {0.0, -0.5, -1.0}) {
    double prev = exact_radial_phi(0.0, 0.1, alpha, 2);
    for (double t : {0.5, 1.0, 4.0}) {
      const double cur = exact_radial_phi(t, 0.1, alpha, 2);
      EXPECT_LT(cur, prev);  // the flow contracts
      prev = cur;
    }
    EXPECT_LT(log_theta(1.0, -0.2, alpha, 2), log_theta(1.0, 0.4, alpha, 2));
  }
}

TEST(BlowDownFactor, PowerFormMatchesTheLogForm) {
  for (double alpha : {-0.25, -1.0, -2.0}) {
    for (double t : {0.0, 0.7, 5.0}) {
      const double direct = theta_pow_alpha(t, 0.2, alpha, 2);
      const double via_log = std::exp(alpha * log_theta(t, 0.2, alpha, 2));
      EXPECT_NEAR(direct, via_log, 1e-12 * direct);
    }
  }
  EXPECT_EQ(theta_pow_alpha(3.1, 0.2, 0.0, 2), 1.0);
  EXPECT_NEAR(log_theta(0.0, 0.37, -1.0, 2), 0.37, 1e-15);  // Theta(0) = e^c
}

TEST(TimeChange, DerivativeOfTheClosedFormIsThePowerFactor) {
  // dt/ds = Theta(t(s))^alpha, checked by symmetric differencing
  const double delta = 1e-5;
  struct Case {
    double alpha, c;
    int n;
  };
  for (const Case& k : {Case{-1.0, 0.0, 2}, Case{-0.5, 0.3, 1}}) {
    for (double s : {0.1, 1.0, 5.0, 19.7}) {
      const double fd = (t_of_s(s + delta, k.c, k.alpha, k.n) -
                         t_of_s(s - delta, k.c, k.alpha, k.n)) /
                        (2.0 * delta);
      const double t = t_of_s(s, k.c, k.alpha, k.n);
      const double ref = theta_pow_alpha(t, k.c, k.alpha, k.n);
      EXPECT_NEAR(fd, ref, 1e-9 * ref) << "s=" << s << " alpha=" << k.alpha;
    }
  }
}

TEST(TimeChange, MapsAreMutuallyInverse) {
  for (double alpha : {0.0, -0.5, -1.0}) {
    for (double s = 0.0; s <= 20.0; s += 2.5) {
      const double t = t_of_s(s, 0.1, alpha, 2);
      EXPECT_GE(t, 0.0);
      EXPECT_NEAR(s_of_t(t, 0.1, alpha, 2), s, 1e-12);
    }
  }
  // alpha = -1, n = 2, c = 0: s = 2 log 2 lands exactly at t = 2
  EXPECT_NEAR(t_of_s(2.0 * std::log(2.0), 0.0, -1.0, 2), 2.0, 1e-14);
  EXPECT_EQ(t_of_s(7.3, 0.0, 0.0, 2), 7.3);
}

TEST(ScalePlanFacts, AnchorsComeFromTheInitialEnvelope) {
  const Grid g = build_grid({2, 1.0, 16, 16});
  const GraphField f = testutil::wavy_field(g);
  double lo = f.phi[0], hi = f.phi[0];
  for (int i = 0; i < g.n_real; ++i) {
    lo = std::min(lo, f.phi[i]);
    hi = std::max(hi, f.phi[i]);
  }
  const ScalePlan plan = make_scale_plan(f, g, -0.5);
  EXPECT_DOUBLE_EQ(plan.phi1, lo);
  EXPECT_DOUBLE_EQ(plan.phi2, hi);
  EXPECT_DOUBLE_EQ(plan.c, 0.5 * (lo + hi));
  EXPECT_EQ(plan.n, 2);
  EXPECT_LT(plan.phi1, plan.phi2);
  EXPECT_THROW(make_scale_plan(f, g, 0.1), std::invalid_argument);
}

TEST(StateMaps, RoundTripIsTheIdentity) {
  const Grid g = build_grid({2, 1.0, 16, 16});
  GraphField f = testutil::wavy_field(g);
  f.time = 0.7;
  const ScalePlan plan = make_scale_plan(f, g, -1.0);
  const GraphField back = unscale_state(rescale_state(f, g, plan), g, plan);
  EXPECT_EQ(back.flavor, Flavor::physical);
  EXPECT_NEAR(back.time, 0.7, 1e-14);
  for (int i = 0; i < g.n_total; ++i) {
    EXPECT_NEAR(back.phi[i], f.phi[i], 1e-13);
    EXPECT_NEAR(back.u[i], f.u[i], 1e-13 * f.u[i]);
  }
}

TEST(StateMaps, ExactRadialOrbitFreezesAtTheFixedPoint) {
  const Grid g = build_grid({2, 1.0, 12, 8});
  const double alpha = -0.5, c = 0.3;
  GraphField f = make_constant(g, c);
  const ScalePlan plan = make_scale_plan(f, g, alpha);
  ASSERT_DOUBLE_EQ(plan.c, c);
  for (double t : {0.0, 0.9, 3.7}) {
    GraphField snap = f;
    snap.time = t;
    const double lt = exact_radial_phi(t, c, alpha, plan.n);
    for (size_t i = 0; i < snap.phi.size(); ++i) {
      snap.phi[i] = lt;
      snap.u[i] = std::exp(lt);
    }
    const GraphField r = rescale_state(snap, g, plan);
    EXPECT_EQ(r.flavor, Flavor::rescaled);
    EXPECT_NEAR(r.time, s_of_t(t, c, alpha, plan.n), 1e-12);
    for (int i = 0; i < g.n_total; ++i) {
      EXPECT_EQ(r.phi[i], 0.0);
      EXPECT_NEAR(r.u[i], 1.0, 1e-15);
    }
  }
}

TEST(StateMaps, RescalingShiftsValuesButNotGradients) {
  const Grid g = build_grid({2, 1.0, 16, 16});
  GraphField f = testutil::wavy_field(g);
  f.time = 1.3;
  const ScalePlan plan = make_scale_plan(f, g, -1.0);
  const GraphField r = rescale_state(f, g, plan);
  const DifferentialPack pf = differentiate(f, g);
  const DifferentialPack pr = differentiate(r, g);
  for (int i = 0; i < g.n_real; ++i) {
    EXPECT_NEAR(pr.d0[i], pf.d0[i], 1e-12);
    EXPECT_NEAR(pr.d1[i], pf.d1[i], 1e-12);
    EXPECT_NEAR(pr.grad_sq[i], pf.grad_sq[i], 1e-12);
  }
}

TEST(StateMaps, RejectWrongFlavorInputs) {
  const Grid g = build_grid({1, 1.0, 9, 0});
  const ScalePlan plan{1, -1.0, 0.0, 0.0, 0.0};
  GraphField phys = make_constant(g, 0.0, Flavor::physical);
  GraphField resc = make_constant(g, 0.0, Flavor::rescaled);
  EXPECT_THROW(rescale_state(resc, g, plan), std::invalid_argument);
  EXPECT_THROW(unscale_state(phys, g, plan), std::invalid_argument);
  EXPECT_NO_THROW(rescale_state(phys, g, plan));
  EXPECT_NO_THROW(unscale_state(resc, g, plan));
}
