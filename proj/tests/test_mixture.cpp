#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rfsep/mixture.hpp"
#include "rfsep/sampling.hpp"
#include "rfsep/siggen.hpp"

using namespace rfsep;

namespace {

CovarianceSpec scalar_cov(double v) {
    CMatrix c(1, 1);
    c << cdouble(v, 0);
    return CovarianceSpec::dense(c);
}

// N=1 model with C_s = 1, C_b = (1, 2), p = (1/2, 1/2): the worked scalar example
MixtureModel scalar_model() {
    RealVector p(2);
    p << 0.5, 0.5;
    return MixtureModel(p, scalar_cov(1.0), {scalar_cov(1.0), scalar_cov(2.0)});
}

MixtureModel circulant_ar_model(Eigen::Index n, double sir_db = 0.0) {
    RealVector p(2);
    p << 0.5, 0.5;
    const double scale = db_to_linear(-sir_db);
    return MixtureModel(p, circulant_white(n),
                        {circulant_ar1(0.5, n).scaled(scale), circulant_ar1(0.95, n).scaled(scale)});
}

}  // namespace

TEST_SUITE("mixture") {
    TEST_CASE("log-likelihood scalar values") {
        RealVector p(1);
        p << 1.0;
        MixtureModel unit(p, scalar_cov(0.5), {scalar_cov(0.5)});  // C_y = 1
        ComplexSignal y(1);
        y << cdouble(0, 0);
        CHECK(unit.log_likelihoods(y)[0] == doctest::Approx(-std::log(std::numbers::pi)).epsilon(1e-12));

        MixtureModel two(p, scalar_cov(1.0), {scalar_cov(1.0)});  // C_y = 2
        y << cdouble(1, 0);                                       // |y|^2 = 1
        CHECK(two.log_likelihoods(y)[0] ==
              doctest::Approx(-std::log(std::numbers::pi) - std::log(2.0) - 0.5).epsilon(1e-12));
    }

    TEST_CASE("identical covariances give equal likelihoods for every y") {
        RealVector p(2);
        p << 0.5, 0.5;
        MixtureModel m(p, scalar_cov(1.0), {scalar_cov(1.5), scalar_cov(1.5)});
        Rng rng(4);
        for (int i = 0; i < 10; ++i) {
            ComplexSignal y(1);
            y << 3.0 * rng.cnormal();
            RealVector ll = m.log_likelihoods(y);
            CHECK(ll[0] == doctest::Approx(ll[1]).epsilon(1e-14));
            RealVector w = m.posterior(y);
            CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
            CHECK(m.map_detect(y) == 0);   // documented tie-break
            CHECK(m.psi_detect(y) == 0);
        }
    }

    TEST_CASE("posterior on the worked scalar example") {
        // w1 = (e^{-1/2}/2) / ((e^{-1/2}/2) + (e^{-1/3}/3)), hand-evaluated densities
        MixtureModel m = scalar_model();
        ComplexSignal y(1);
        y << cdouble(1, 0);
        const double t1 = std::exp(-0.5) / 2.0;
        const double t2 = std::exp(-1.0 / 3.0) / 3.0;
        const double w1 = t1 / (t1 + t2);
        RealVector w = m.posterior(y);
        CHECK(w[0] == doctest::Approx(w1).epsilon(1e-12));
        CHECK(w[0] == doctest::Approx(0.5594).epsilon(2e-4));
        CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("posterior is invariant to a constant shift of all log-likelihoods") {
        MixtureModel m = scalar_model();
        ComplexSignal y(1);
        y << cdouble(0.3, -1.2);
        RealVector ll = m.log_likelihoods(y);
        RealVector w1 = m.posterior_from_loglik(ll);
        RealVector w2 = m.posterior_from_loglik((ll.array() + 1234.5).matrix());
        CHECK((w1 - w2).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("zero prior yields zero weight") {
        RealVector p(2);
        p << 1.0, 0.0;
        MixtureModel m(p, scalar_cov(1.0), {scalar_cov(1.0), scalar_cov(2.0)});
        ComplexSignal y(1);
        y << cdouble(2, 1);
        RealVector w = m.posterior(y);
        CHECK(w[0] == doctest::Approx(1.0));
        CHECK(w[1] == 0.0);
    }

    TEST_CASE("lmmse scalar gains") {
        RealVector p1(1);
        p1 << 1.0;
        MixtureModel m(p1, scalar_cov(1.0), {scalar_cov(1.0)});
        ComplexSignal y(1);
        y << cdouble(2, 2);
        CHECK(std::abs(m.lmmse(y, 0)[0] - cdouble(1, 1)) < 1e-12);

        // C_b = 0 keeps y untouched
        MixtureModel noiseless(p1, scalar_cov(1.0), {scalar_cov(0.0)});
        CHECK(std::abs(noiseless.lmmse(y, 0)[0] - y[0]) < 1e-12);

        // N=2, C_s = I, C_b = 2I: per-coordinate gain 1/3
        CMatrix eye = CMatrix::Identity(2, 2);
        MixtureModel m2(p1, CovarianceSpec::dense(eye), {CovarianceSpec::dense(2.0 * eye)});
        ComplexSignal y2(2);
        y2 << cdouble(3, 0), cdouble(0, 3);
        ComplexSignal s2 = m2.lmmse(y2, 0);
        CHECK(std::abs(s2[0] - cdouble(1, 0)) < 1e-12);
        CHECK(std::abs(s2[1] - cdouble(0, 1)) < 1e-12);

        CHECK_THROWS_AS(m2.lmmse(y2, 1), InvalidParameterError);
    }

    TEST_CASE("mmse on the worked scalar example") {
        MixtureModel m = scalar_model();
        ComplexSignal y(1);
        y << cdouble(1, 0);
        const double t1 = std::exp(-0.5) / 2.0;
        const double t2 = std::exp(-1.0 / 3.0) / 3.0;
        const double w1 = t1 / (t1 + t2);
        const double gain = w1 * 0.5 + (1.0 - w1) / 3.0;
        SeparationResult res = m.mmse(y);
        CHECK(std::abs(res.s_hat[0] - gain * y[0]) < 1e-12);
        CHECK(std::abs(res.s_hat[0].real() - 0.4266) < 2e-4);
        REQUIRE(res.posterior.has_value());
        CHECK((*res.posterior)[0] == doctest::Approx(w1).epsilon(1e-12));

        // K=1 collapses to lmmse
        RealVector p1(1);
        p1 << 1.0;
        MixtureModel one(p1, scalar_cov(1.0), {scalar_cov(2.0)});
        CHECK(std::abs(one.mmse(y).s_hat[0] - one.lmmse(y, 0)[0]) < 1e-14);
    }

    TEST_CASE("dts plugs in the MAP type") {
        MixtureModel m = scalar_model();
        ComplexSignal y(1);
        y << cdouble(1, 0);
        CHECK(m.map_detect(y) == 0);  // w1 ~ 0.5594 wins
        SeparationResult res = m.dts(y);
        REQUIRE(res.k_hat.has_value());
        CHECK(*res.k_hat == 0);
        CHECK(std::abs(res.s_hat[0] - 0.5 * y[0]) < 1e-12);  // type-0 gain, not the mixture gain
    }

    TEST_CASE("dts stays within the posterior-leakage bound of mmse") {
        // || dts - mmse || <= (1 - w_khat) max_k || lmmse_k - lmmse_khat ||
        const Eigen::Index n = 12;
        MixtureModel m = circulant_ar_model(n);
        Rng rng(60);
        GaussianSampler s0(m.cov_y(0)), s1(m.cov_y(1));
        for (int t = 0; t < 50; ++t) {
            ComplexSignal y = (t % 2 == 0 ? s0 : s1).draw(rng);
            SeparationResult d = m.dts(y);
            SeparationResult e = m.mmse(y);
            const int khat = *d.k_hat;
            const ComplexSignal ref = m.lmmse(y, khat);
            double spread = 0.0;
            for (int k = 0; k < m.num_types(); ++k)
                spread = std::max(spread, (m.lmmse(y, k) - ref).norm());
            const double leak = 1.0 - (*d.posterior)[khat];
            CHECK((d.s_hat - e.s_hat).norm() <= leak * spread + 1e-12);
        }
    }

    TEST_CASE("dts equals mmse when the posterior is concentrated") {
        MixtureModel m = scalar_model();
        ComplexSignal y(1);
        y << cdouble(40, 0);  // |y|^2 huge: posterior collapses onto the wide type
        RealVector w = m.posterior(y);
        CHECK(w.maxCoeff() > 1.0 - 1e-12);
        ComplexSignal d = m.dts(y).s_hat;
        ComplexSignal e = m.mmse(y).s_hat;
        CHECK((d - e).norm() <= 1e-9 * e.norm());
    }

    TEST_CASE("psi arithmetic and centering") {
        RealVector p(1);
        p << 1.0;
        MixtureModel m(p, scalar_cov(0.5), {scalar_cov(0.5)});  // C_y = 1
        ComplexSignal y(1);
        y << cdouble(2, 0);  // |y|^2 = 4, N = 1
        CHECK(m.psi(y, 0) == doctest::Approx(3.0).epsilon(1e-12));

        // Monte Carlo: matched type mean psi is 0 within 3 stderr
        const Eigen::Index n = 16;
        RealVector p2(1);
        p2 << 1.0;
        MixtureModel mn(p2, circulant_white(n), {circulant_ar1(0.6, n)});
        GaussianSampler sampler(mn.cov_y(0));
        Rng rng(31337);
        const int trials = 10000;
        double sum = 0.0, sum2 = 0.0;
        for (int t = 0; t < trials; ++t) {
            const double v = mn.psi(sampler.draw(rng), 0);
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / trials;
        const double sd = std::sqrt((sum2 - trials * mean * mean) / (trials - 1));
        CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(static_cast<double>(trials)));
    }

    TEST_CASE("psi_detect separates well-spread AR types at N=512") {
        // interference-dominated regime keeps the cross-type psi gaps wide
        const Eigen::Index n = 512;
        MixtureModel m = circulant_ar_model(n, -10.0);
        Rng rng(777);
        GaussianSampler s0(m.cov_y(0)), s1(m.cov_y(1));
        int correct = 0;
        const int trials = 1000;
        for (int t = 0; t < trials; ++t) {
            correct += (m.psi_detect(s0.draw(rng)) == 0) ? 1 : 0;
            correct += (m.psi_detect(s1.draw(rng)) == 1) ? 1 : 0;
        }
        CHECK(correct >= static_cast<int>(0.99 * 2 * trials));
    }

    TEST_CASE("tdc_gap: matched probe shrinks with N, scalar cross gap hits 1/2") {
        // probe != true with C_yl = 2 C_yk: |psi| -> |tr(C_yl^-1 C_yk)/N - 1| = 1/2
        const Eigen::Index n = 256;
        RealVector p(2);
        p << 0.5, 0.5;
        MixtureModel m(p, circulant_white(n),
                       {circulant_white(n), circulant_white(n).scaled(3.0)});  // C_y: 2I and 4I
        MonteCarloStat cross = tdc_gap(m, 0, 1, 2000, 99);
        CHECK(std::abs(cross.mean - 0.5) < 3.0 * cross.stderr_ + 0.01);

        double prev = std::numeric_limits<double>::infinity();
        for (Eigen::Index nn : {64, 256, 1024}) {
            MixtureModel mm = circulant_ar_model(nn);
            MonteCarloStat matched = tdc_gap(mm, 0, 0, 400, 5);
            CHECK(matched.mean < prev);
            prev = matched.mean;
        }

        // identical covariances: cross gap collapses to zero (TDC violated)
        MixtureModel degenerate(p, circulant_white(n), {circulant_white(n), circulant_white(n)});
        MonteCarloStat gap = tdc_gap(degenerate, 0, 1, 2000, 7);
        CHECK(gap.mean < 0.2);

        CHECK_THROWS_AS(tdc_gap(m, 0, 1, 10, 1), InvalidParameterError);
    }

    TEST_CASE("stationary FFT path equals the dense path on circulant models") {
        for (Eigen::Index n : {8, 64}) {
            RealVector p(2);
            p << 0.5, 0.5;
            auto cs = circulant_ar1(0.3, n);
            auto cb0 = circulant_ar1(0.5, n);
            auto cb1 = circulant_ar1(0.95, n);
            MixtureModel fast(p, cs, {cb0, cb1});
            REQUIRE(fast.stationary_path());
            MixtureModel dense(p, CovarianceSpec::dense(cs.to_dense()),
                               {CovarianceSpec::dense(cb0.to_dense()),
                                CovarianceSpec::dense(cb1.to_dense())});
            REQUIRE(!dense.stationary_path());

            Rng rng(123 + n);
            for (int rep = 0; rep < 5; ++rep) {
                ComplexSignal y = rng.cnormal_vector(n) * 2.0;
                ComplexSignal a = fast.stationary_lmmse_fft(y, 0);
                ComplexSignal b = dense.lmmse(y, 0);
                CHECK((a - b).norm() <= 1e-10 * std::max(1.0, b.norm()));

                RealVector la = fast.log_likelihoods(y);
                RealVector lb = dense.log_likelihoods(y);
                CHECK(std::abs(la[0] - lb[0]) < 1e-8 * std::abs(lb[0]));
                CHECK(std::abs(la[1] - lb[1]) < 1e-8 * std::abs(lb[1]));

                CHECK((fast.mmse(y).s_hat - dense.mmse(y).s_hat).norm() <=
                      1e-9 * std::max(1.0, dense.mmse(y).s_hat.norm()));
            }
        }
        MixtureModel dense_only(
            (RealVector(1) << 1.0).finished(), scalar_cov(1.0), {scalar_cov(1.0)});
        ComplexSignal y(1);
        y << cdouble(1, 0);
        CHECK_THROWS_AS(dense_only.stationary_lmmse_fft(y, 0), UnsupportedFormError);
    }

    TEST_CASE("flat spectra halve the observation; zero interference passes it through") {
        const Eigen::Index n = 16;
        RealVector p(1);
        p << 1.0;
        MixtureModel half(p, circulant_white(n), {circulant_white(n)});
        Rng rng(8);
        ComplexSignal y = rng.cnormal_vector(n);
        CHECK((half.stationary_lmmse_fft(y, 0) - 0.5 * y).norm() < 1e-12);

        MixtureModel passthrough(p, circulant_white(n), {circulant_white(n).scaled(0.0)});
        CHECK((passthrough.stationary_lmmse_fft(y, 0) - y).norm() < 1e-12);
    }

    TEST_CASE("cov_y composition") {
        RealVector p(1);
        p << 1.0;
        CMatrix eye = CMatrix::Identity(3, 3);
        MixtureModel m(p, CovarianceSpec::dense(eye), {CovarianceSpec::dense(eye)});
        CHECK((m.cov_y(0).matrix() - 2.0 * eye).norm() < 1e-14);
        CHECK_THROWS_AS(m.cov_y(5), InvalidParameterError);
    }

    TEST_CASE("optimality ordering: mmse beats dts and unconditional lmmse") {
        const Eigen::Index n = 32;
        MixtureModel m = circulant_ar_model(n);
        Rng rng(2718);
        GaussianSampler soi(m.soi_cov());
        std::vector<GaussianSampler> bk;
        for (int k = 0; k < m.num_types(); ++k) bk.emplace_back(m.interference_cov(k));
        const int trials = 10000;
        double acc_mmse = 0, acc_dts = 0, acc_l0 = 0, acc_l1 = 0;
        double sq_mmse = 0, sq_dts = 0;
        for (int t = 0; t < trials; ++t) {
            const int k = rng.uniform() < 0.5 ? 0 : 1;
            ComplexSignal s = soi.draw(rng);
            ComplexSignal y = s + bk[static_cast<std::size_t>(k)].draw(rng);
            const double e_m = (m.mmse(y).s_hat - s).squaredNorm();
            const double e_d = (m.dts(y).s_hat - s).squaredNorm();
            acc_mmse += e_m;
            acc_dts += e_d;
            sq_mmse += e_m * e_m;
            sq_dts += e_d * e_d;
            acc_l0 += (m.lmmse(y, 0) - s).squaredNorm();
            acc_l1 += (m.lmmse(y, 1) - s).squaredNorm();
        }
        const double mean_mmse = acc_mmse / trials;
        const double mean_dts = acc_dts / trials;
        const double se_mmse = std::sqrt((sq_mmse / trials - mean_mmse * mean_mmse) / trials);
        const double se_dts = std::sqrt((sq_dts / trials - mean_dts * mean_dts) / trials);
        const double slack = 3.0 * std::sqrt(se_mmse * se_mmse + se_dts * se_dts);
        CHECK(mean_mmse <= mean_dts + slack);
        CHECK(mean_mmse <= acc_l0 / trials + slack);
        CHECK(mean_mmse <= acc_l1 / trials + slack);
    }

    TEST_CASE("model construction rejects bad priors and mismatched dims") {
        RealVector bad(2);
        bad << 0.6, 0.3;
        CHECK_THROWS_AS(MixtureModel(bad, scalar_cov(1.0), {scalar_cov(1.0), scalar_cov(1.0)}),
                        InvalidParameterError);
        RealVector p(2);
        p << 0.5, 0.5;
        CHECK_THROWS_AS(MixtureModel(p, scalar_cov(1.0), {scalar_cov(1.0)}), InvalidParameterError);
        CHECK_THROWS_AS(
            MixtureModel(p, circulant_white(4), {circulant_white(4), circulant_white(8)}),
            InvalidParameterError);
    }
}
