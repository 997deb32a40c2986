#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rfsep/covariance.hpp"
#include "rfsep/rng.hpp"

using namespace rfsep;

TEST_SUITE("covariance") {
    TEST_CASE("dense form validates Hermitian symmetry") {
        CMatrix good(2, 2);
        good << cdouble(2, 0), cdouble(0.5, 0.25), cdouble(0.5, -0.25), cdouble(1, 0);
        CHECK_NOTHROW(CovarianceSpec::dense(good));

        CMatrix bad(2, 2);
        bad << cdouble(2, 0), cdouble(0.5, 0.25), cdouble(0.5, 0.25), cdouble(1, 0);
        CHECK_THROWS_AS(CovarianceSpec::dense(bad), InvalidParameterError);
    }

    TEST_CASE("toeplitz expansion places lags on the diagonals") {
        ComplexSignal r(3);
        r << cdouble(1, 0), cdouble(0.5, 0.1), cdouble(0.25, 0);
        auto spec = CovarianceSpec::toeplitz(r, 4);
        CMatrix t = spec.to_dense();
        CHECK(t(0, 0) == cdouble(1, 0));
        CHECK(t(2, 1) == cdouble(0.5, 0.1));
        CHECK(t(1, 2) == std::conj(cdouble(0.5, 0.1)));
        CHECK(t(3, 1) == cdouble(0.25, 0));
        CHECK(t(3, 0) == cdouble(0, 0));  // unspecified lag
        CHECK((t - t.adjoint()).norm() == doctest::Approx(0.0));
    }

    TEST_CASE("circulant requires the Hermitian wrap") {
        ComplexSignal ok(4);
        ok << cdouble(1, 0), cdouble(0.3, 0.1), cdouble(0.1, 0), cdouble(0.3, -0.1);
        CHECK_NOTHROW(CovarianceSpec::circulant(ok));

        ComplexSignal bad(4);
        bad << cdouble(1, 0), cdouble(0.3, 0.1), cdouble(0.1, 0), cdouble(0.9, 0.4);
        CHECK_THROWS_AS(CovarianceSpec::circulant(bad), InvalidParameterError);
    }

    TEST_CASE("circulant spectrum equals eigenvalues of the dense expansion") {
        ComplexSignal c(4);
        c << cdouble(2, 0), cdouble(0.5, 0), cdouble(0.25, 0), cdouble(0.5, 0);
        auto spec = CovarianceSpec::circulant(c);
        RealVector lam = spec.circulant_spectrum();
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(spec.to_dense());
        RealVector lam_sorted = lam;
        std::sort(lam_sorted.data(), lam_sorted.data() + lam_sorted.size());
        CHECK((lam_sorted - eig.eigenvalues()).norm() < 1e-10);
    }

    TEST_CASE("negative embedded spectrum raises NotPsdError") {
        // spectrum of this first column is (1.7, 1.9, -1.5, 1.9)
        ComplexSignal c(4);
        c << cdouble(1, 0), cdouble(0.8, 0), cdouble(-0.9, 0), cdouble(0.8, 0);
        auto spec = CovarianceSpec::circulant(c);
        CHECK_THROWS_AS(spec.circulant_spectrum(), NotPsdError);
    }

    TEST_CASE("sum keeps matching stationary forms and falls back to dense otherwise") {
        ComplexSignal a(3), b(3);
        a << 1.0, 0.5, 0.5;
        b << 2.0, 0.1, 0.1;
        auto ca = CovarianceSpec::circulant(a);
        auto cb = CovarianceSpec::circulant(b);
        auto sum = ca + cb;
        CHECK(sum.form() == CovarianceSpec::Form::Circulant);
        CHECK(sum.acov()[0] == cdouble(3.0, 0));

        auto ta = CovarianceSpec::toeplitz(a, 5);
        auto tb = CovarianceSpec::toeplitz(b.head(2), 5);
        auto tsum = ta + tb;
        CHECK(tsum.form() == CovarianceSpec::Form::Toeplitz);
        CHECK(tsum.acov().size() == 3);
        CHECK(tsum.acov()[1] == cdouble(0.6, 0));

        // stationary + dense -> dense equal to Toeplitz expansion plus dense
        CMatrix d = CMatrix::Identity(5, 5) * cdouble(0.5, 0);
        auto mixed = ta + CovarianceSpec::dense(d);
        CHECK(mixed.form() == CovarianceSpec::Form::Dense);
        CHECK((mixed.matrix() - (ta.to_dense() + d)).norm() < 1e-12);
    }

    TEST_CASE("scaling") {
        ComplexSignal a(2);
        a << 4.0, 1.0;
        auto spec = CovarianceSpec::toeplitz(a, 3).scaled(0.25);
        CHECK(spec.acov()[0] == cdouble(1.0, 0));
        CHECK_THROWS_AS(spec.scaled(-1.0), InvalidParameterError);
    }

    TEST_CASE("trace for every form") {
        ComplexSignal a(2);
        a << 3.0, 1.0;
        CHECK(CovarianceSpec::toeplitz(a, 4).trace() == doctest::Approx(12.0));
        CMatrix d = CMatrix::Identity(3, 3) * cdouble(2, 0);
        CHECK(CovarianceSpec::dense(d).trace() == doctest::Approx(6.0));
    }

    TEST_CASE("toeplitz embedding covers the dense expansion") {
        ComplexSignal r(3);
        r << cdouble(1, 0), cdouble(0.4, 0.2), cdouble(0.1, -0.05);
        auto spec = CovarianceSpec::toeplitz(r, 3);
        auto [col, spectrum] = spec.embedding();
        REQUIRE(col.size() == 5);
        // leading 3x3 block of the embedded circulant equals the Toeplitz matrix
        CMatrix emb(5, 5);
        for (Eigen::Index i = 0; i < 5; ++i)
            for (Eigen::Index j = 0; j < 5; ++j) {
                Eigen::Index d = (i - j) % 5;
                if (d < 0) d += 5;
                emb(i, j) = col[d];
            }
        CHECK((emb.topLeftCorner(3, 3) - spec.to_dense()).norm() < 1e-12);
        CHECK(spectrum.minCoeff() >= 0.0);
    }
}
