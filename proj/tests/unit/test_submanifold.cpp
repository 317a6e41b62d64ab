#include <gtest/gtest.h>

#include <wdvv/submanifold.hpp>

#include "support.hpp"

using namespace wdvv;
using testing_support::antidiagonal_potential;
using testing_support::P;
using testing_support::random_poly;

namespace {

PsiSystem reduced(const char* f, int c = 1) { return reduce_potential(antidiagonal_potential(f), Rational(c)); }

std::vector<Poly> entries(const PolyTensor& t) { return {t.begin(), t.end()}; }

PsiSystem random_pair(std::mt19937& rng) {
    return PsiSystem(ConstSymMatrix::antidiagonal_ones(3), ConstSymMatrix::identity(2),
                     {random_poly(rng, 3, 4, 5, 2), random_poly(rng, 3, 4, 5, 2)});
}

}  // namespace

TEST(SecondForms, QuadraticPsiGivesConstantForm) {
    PsiSystem s(ConstSymMatrix::antidiagonal_ones(3), ConstSymMatrix::identity(1), {P("u1*u3 + 1/2*u2^2")});
    EXPECT_EQ(second_forms(s).front(), PolyMatrix::from_constant(ConstSymMatrix::antidiagonal_ones(3).matrix(), 3));
}

TEST(SecondForms, ZeroPsi) {
    PsiSystem s(ConstSymMatrix::identity(2), ConstSymMatrix::identity(1), {Poly(2)});
    EXPECT_TRUE(second_forms(s).front().is_zero());
}

TEST(SecondForms, ReductionGivesThirdDerivativeSlices) {
    Potential p = antidiagonal_potential(testing_support::kSol1);
    auto forms = second_forms(reduce_potential(p, 1));
    PolyTensor d3 = p.third_derivatives();
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(forms[a](i, j), d3(a, i, j));
}

TEST(Gauss, ReducedSolutionsVanish) {
    EXPECT_TRUE(all_zero(gauss_residual(reduced(testing_support::kSol1))));
    EXPECT_TRUE(all_zero(gauss_residual(reduced(testing_support::kSol2, -1))));
}

TEST(Gauss, SingleQuadraticPsiLeavesConstantCurvature) {
    auto eta = ConstSymMatrix::antidiagonal_ones(3);
    PsiSystem s(eta, ConstSymMatrix::identity(1), {P("u1*u3 + 1/2*u2^2")});
    PolyTensor g = gauss_residual(s);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 3; ++k)
                for (std::size_t l = 0; l < 3; ++l)
                    EXPECT_EQ(g(i, j, k, l), Poly::constant(3, eta(i, k) * eta(j, l) - eta(i, l) * eta(j, k)));
    EXPECT_GT(count_nonzero(g), 0u);
}

TEST(Gauss, OneDimensionalIsVacuous) {
    PsiSystem s(ConstSymMatrix::identity(1), ConstSymMatrix::identity(2), {P("u1^5", 1), P("u1^3 - u1^2", 1)});
    EXPECT_TRUE(all_zero(gauss_residual(s)));
    EXPECT_TRUE(all_zero(ricci_residual(s)));
}

TEST(Ricci, ReducedSol1Vanishes) { EXPECT_TRUE(all_zero(ricci_residual(reduced(testing_support::kSol1)))); }

TEST(Ricci, DiagonalEntriesVanish) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        PolyTensor r = ricci_residual(random_pair(rng));
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t k = 0; k < 3; ++k)
                for (std::size_t l = 0; l < 3; ++l) EXPECT_TRUE(r(a, a, k, l).is_zero());
    }
}

TEST(Ricci, RandomPairIsNonzero) {
    std::mt19937 rng(11);
    EXPECT_GT(count_nonzero(ricci_residual(random_pair(rng))), 0u);
}

TEST(Reduction, MetricsAndPsi) {
    Potential p = antidiagonal_potential(testing_support::kSol1);
    PsiSystem s = reduce_potential(p, 2);
    EXPECT_EQ(s.l(), 3u);
    EXPECT_EQ(s.mu().inv(0, 2), 2);
    EXPECT_EQ(s.mu()(0, 2), make_rational(1, 2));
    EXPECT_EQ(s.psi()[1], p.phi().derivative(1));
    EXPECT_THROW(reduce_potential(p, 0), std::invalid_argument);
}

TEST(Reduction, QuadraticPotentialGivesZeroForms) {
    Potential p(ConstSymMatrix::antidiagonal_ones(3), P("u1*u3 + u2^2"));
    for (int c : {1, -3}) {
        PsiSystem s = reduce_potential(p, c);
        for (const auto& w : second_forms(s)) EXPECT_TRUE(w.is_zero());
        EXPECT_TRUE(solves_gauss_ricci(s));
    }
}

TEST(Reduction, ResidualsAreCombinationsOfWdvvEntries) {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 4; ++trial) {
        Potential p(testing_support::random_metric(rng, 3), random_poly(rng, 3, 5, 5, 3));
        std::vector<Poly> basis = entries(wdvv_residual(p));
        ASSERT_GT(count_nonzero(wdvv_residual(p)), 0u);
        for (int c : {1, -1}) {
            PsiSystem s = reduce_potential(p, c);
            PolyTensor g = gauss_residual(s), r = ricci_residual(s);
            EXPECT_GT(count_nonzero(g), 0u);
            EXPECT_GT(count_nonzero(r), 0u);
            for (const auto& e : g) EXPECT_TRUE(span_coefficients(e, basis));
            for (const auto& e : r) EXPECT_TRUE(span_coefficients(e, basis));
        }
    }
}

TEST(Reduction, AffineChangesToPsiDoNotMatter) {
    std::mt19937 rng(77);
    PsiSystem s = random_pair(rng);
    std::vector<Poly> shifted = s.psi();
    shifted[0] += P("3*u1 - u2 + 7");
    shifted[1] += P("u3 - 2");
    PsiSystem t(s.eta(), s.mu(), shifted);
    EXPECT_EQ(entries(gauss_residual(s)), entries(gauss_residual(t)));
    EXPECT_EQ(entries(ricci_residual(s)), entries(ricci_residual(t)));
}

TEST(Codazzi, HoldsForHessians) {
    std::mt19937 rng(9);
    EXPECT_TRUE(codazzi_check(reduced(testing_support::kSol1)));
    EXPECT_TRUE(codazzi_check(random_pair(rng)));
    PsiSystem five(ConstSymMatrix::identity(5), ConstSymMatrix::identity(1), {random_poly(rng, 5, 5, 10)});
    EXPECT_TRUE(codazzi_check(five));
}

TEST(ZeroCurvature, ReducedSol1IsFlatForSymbolicParameters) {
    EXPECT_TRUE(zero_curvature_residual(reduced(testing_support::kSol1)).is_zero());
}

TEST(ZeroCurvature, ZeroParametersGiveClosedness) {
    std::mt19937 rng(13);
    EXPECT_TRUE(zero_curvature_residual(random_pair(rng), {Rational(0), Rational(0)}).is_zero());
}

TEST(ZeroCurvature, NonSolutionCurvatureCarriesLambdaRho) {
    std::mt19937 rng(14);
    PsiSystem s = random_pair(rng);
    LaxCurvature k = zero_curvature_residual(s);
    EXPECT_FALSE(k.is_zero());
    const std::size_t lambda = 3, rho = 4;
    for (const auto& m : k.curvature)
        for (const auto& e : m)
            for (const auto& [exps, c] : e.terms()) {
                EXPECT_EQ(exps[lambda], 1u);
                EXPECT_EQ(exps[rho], 1u);
            }
}

TEST(ZeroCurvature, VanishesIffGaussAndRicciVanish) {
    std::mt19937 rng(15);
    std::vector<PsiSystem> corpus{reduced(testing_support::kSol1), reduced(testing_support::kSol2, -1),
                                  reduced(testing_support::kSol1Perturbed), random_pair(rng), random_pair(rng)};
    for (const auto& s : corpus) EXPECT_EQ(zero_curvature_residual(s).is_zero(), solves_gauss_ricci(s));
}
