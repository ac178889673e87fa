#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "oam/coupling.hpp"

using namespace oam;

namespace {

const BeamParams kParams(795e-9, 1.5e-3);

std::vector<double> lens_grid() { return radial_grid(8e-3, 0.5e-3, 4096); }

}  // namespace

TEST(Coupling, MatchedModeGivesAlphaSquared) {
    const auto fov = FOVField::gaussian(0.8e-3, 1.0, lens_grid());
    std::map<int, RadialField> prof{{0, fov.profile}, {10, hygg_field(kParams, 10, 1.0, lens_grid())}};
    EXPECT_NEAR(coupling_efficiency(SuperpositionState::pure(0), prof, fov), 1.0, 1e-8);
    const auto half = SuperpositionState::two_mode(std::sqrt(0.5), std::sqrt(0.5), 10);
    EXPECT_NEAR(coupling_efficiency(half, prof, fov), 0.5, 1e-8);
}

TEST(Coupling, GaussianWaistMismatchClosedForm) {
    for (double w1 : {0.5e-3, 0.8e-3, 1.2e-3}) {
        const double w2 = 0.75e-3;
        const auto fov = FOVField::gaussian(w2, 0.0, lens_grid());
        std::map<int, RadialField> prof{{0, FOVField::gaussian(w1, 0.0, lens_grid()).profile}};
        const double expect = std::pow(2.0 * w1 * w2 / (w1 * w1 + w2 * w2), 2);
        EXPECT_NEAR(coupling_efficiency(SuperpositionState::pure(0), prof, fov), expect, 1e-6);
    }
}

TEST(Coupling, FactorizesInAlphaAndIgnoresGlobalPhase) {
    const double z = 1.0;
    const auto grid = lens_grid();
    const auto fov = FOVField::gaussian(0.75e-3, z, grid);
    std::map<int, RadialField> prof{{0, lg_mode(kParams, 0, 0, z, grid)}, {6, hygg_field(kParams, 6, z, grid)}};
    const double eta1 = coupling_efficiency(SuperpositionState::pure(0), prof, fov);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const double a2 = u(rng), ph = 6.283 * u(rng);
        const auto st = SuperpositionState::two_mode(std::polar(std::sqrt(a2), ph),
                                                     std::polar(std::sqrt(1 - a2), 2.0 * ph + 1.0), 6);
        EXPECT_NEAR(coupling_efficiency(st, prof, fov), a2 * eta1, 1e-12);
    }
}

TEST(Coupling, HelicalTermsAreOrthogonal) {
    for (int l = 1; l <= 12; ++l) {
        EXPECT_LT(std::abs(detail::azimuthal_integral(l)), 1e-10) << l;
        EXPECT_LT(std::abs(detail::azimuthal_integral(-l)), 1e-10) << l;
    }
    EXPECT_NEAR(std::abs(detail::azimuthal_integral(0)), 2.0 * std::numbers::pi, 1e-12);
}

TEST(Coupling, ApertureOnlyRemovesLight) {
    const double z = 1.0;
    const auto grid = lens_grid();
    const auto fov = FOVField::gaussian(0.75e-3, z, grid);
    std::map<int, RadialField> prof{{0, lg_mode(kParams, 0, 0, z, grid)}};
    const double open = coupling_efficiency(SuperpositionState::pure(0), prof, fov);
    const double stopped = coupling_efficiency(SuperpositionState::pure(0), prof, fov, 0.75e-3);
    EXPECT_LT(stopped, open);
    EXPECT_GT(stopped, 0.0);
}

TEST(Coupling, Preconditions) {
    const auto fov = FOVField::gaussian(0.75e-3, 1.0, lens_grid());
    std::map<int, RadialField> prof{{0, FOVField::gaussian(0.75e-3, 0.5, lens_grid()).profile}};
    EXPECT_THROW(coupling_efficiency(SuperpositionState::pure(0), prof, fov), DomainError);
    EXPECT_THROW(coupling_efficiency(SuperpositionState::pure(3), prof, fov), LookupError);
    EXPECT_THROW(coupling_efficiency(SuperpositionState::pure(0), prof, fov, -1.0), DomainError);
}

TEST(Distinguishability, Arithmetic) {
    EXPECT_DOUBLE_EQ(distinguishability(100, 0), 1.0);
    EXPECT_DOUBLE_EQ(distinguishability(50, 50), 0.0);
    EXPECT_DOUBLE_EQ(distinguishability(99, 1), 0.98);
    EXPECT_THROW(distinguishability(0, 0), DomainError);
}

TEST(Collapse, PostStates) {
    const auto st = SuperpositionState::two_mode(std::sqrt(0.5), std::sqrt(0.5), 10);
    const auto one = collapse_state(st, 1.0);
    EXPECT_DOUBLE_EQ(one.post_state.weight(0), 1.0);
    EXPECT_DOUBLE_EQ(one.post_state.weight(10), 0.0);
    const auto zero = collapse_state(st, 0.0);
    EXPECT_DOUBLE_EQ(zero.post_state.weight(10), 1.0);
    const auto mid = collapse_state(st, 0.98, 0.4, 2.0);
    EXPECT_NEAR(std::abs(mid.post_state.terms()[0].coeff), std::sqrt(0.98), 1e-15);
    EXPECT_NEAR(std::abs(mid.post_state.terms()[1].coeff), std::sqrt(0.02), 1e-15);
    EXPECT_DOUBLE_EQ(mid.efficiency, 0.4);
    EXPECT_DOUBLE_EQ(mid.collapse_epoch, 2.0);
    EXPECT_DOUBLE_EQ(collapse_state(st, 0.5).efficiency, st.weight(0));
    EXPECT_THROW(collapse_state(SuperpositionState::pure(10), 0.5), DomainError);
    EXPECT_THROW(collapse_state(st, 1.5), DomainError);
}

TEST(Collapse, LeakageFoldsIntoGaussianPart) {
    const auto st = fold_leakage(SuperpositionState::two_mode(std::sqrt(0.5), std::sqrt(0.5), 12), 0.1);
    EXPECT_NEAR(st.weight(0), 0.55, 1e-15);
    EXPECT_NEAR(st.weight(12), 0.45, 1e-15);
}

TEST(Distinguishability, SimulatedTwistedLightAtOneMetre) {
    const auto run = simulate_distinguishability(kParams, 10, 1.0, 0.75e-3, 0.75e-3, 0.0, 1e5, 42);
    EXPECT_GE(run.d, 0.98);
    EXPECT_GT(run.n_gauss, 0);
    // Unconverted light at the 1% level still leaves D near 0.98.
    const auto leaky = simulate_distinguishability(kParams, 10, 1.0, 0.75e-3, 0.75e-3, 0.01, 1e5, 42);
    EXPECT_NEAR(leaky.d, 0.99 / 1.01, 0.005);
}
