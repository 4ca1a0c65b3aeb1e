#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nsfde/errors.hpp"
#include "nsfde/rng.hpp"
#include "nsfde/segment.hpp"

using namespace nsfde;

namespace {

Segment scalar_segment(double h, int depth, const std::function<double(double)>& f) {
    return Segment::from_function(h, depth, 1, [&](double theta) {
        return Eigen::VectorXd::Constant(1, f(theta));
    });
}

Segment random_segment(const CounterRng& rng, std::uint64_t unit, double h, int depth, int dim) {
    DrawSeq draw(rng, 77, unit);
    Eigen::MatrixXd vals(dim, depth + 1);
    for (int i = 0; i <= depth; ++i) {
        for (int c = 0; c < dim; ++c) vals(c, i) = draw.normal();
    }
    return Segment(h, std::move(vals));
}

}  // namespace

TEST_CASE("weighted norm basics") {
    // Constant history: the weight e^{r theta} peaks at theta = 0.
    CHECK(cr_norm(Segment::constant(0.1, 30, 1.0), 0.7) == doctest::Approx(1.0));

    // phi = e^{-r theta} cancels the weight exactly.
    const double r = 1.0;
    auto seg = scalar_segment(1e-3, 1500, [&](double th) { return std::exp(-r * th); });
    CHECK(cr_norm(seg, r) == doctest::Approx(1.0).epsilon(1e-12));

    // phi(theta) = theta: e^{theta}|theta| peaks at theta = -1.
    auto ramp = scalar_segment(1e-3, 2000, [](double th) { return th; });
    CHECK(cr_norm(ramp, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
    // Dense-scan oracle over a finer grid agrees.
    double scan = 0.0;
    for (double th = -2.0; th <= 0.0; th += 1e-5) {
        scan = std::max(scan, std::exp(th) * std::abs(th));
    }
    CHECK(cr_norm(ramp, 1.0) == doctest::Approx(scan).epsilon(1e-4));
}

TEST_CASE("sup norm basics") {
    Eigen::VectorXd v(2);
    v << 2.0, 0.0;
    CHECK(sup_norm(Segment::constant(0.5, 4, v)) == doctest::Approx(2.0));

    auto ramp = scalar_segment(0.01, 300, [](double th) { return th; });
    CHECK(sup_norm(ramp) == doctest::Approx(3.0));

    auto diff = segment_sub(ramp, ramp);
    CHECK(sup_norm(diff) == 0.0);
}

TEST_CASE("segment arithmetic and shape checks") {
    auto a = Segment::constant(0.1, 5, 1.0);
    auto b = Segment::constant(0.1, 5, 0.25);
    CHECK(segment_sub(a, b).values().isApproxToConstant(0.75));
    CHECK_THROWS_AS(segment_sub(a, Segment::constant(0.1, 6, 0.0)), ShapeMismatchError);
    CHECK_THROWS_AS(segment_sub(a, Segment::constant(0.2, 5, 0.0)), ShapeMismatchError);

    Eigen::MatrixXd bad(1, 3);
    bad << 0.0, std::nan(""), 1.0;
    CHECK_THROWS_AS(Segment(0.1, bad), InvalidSegmentError);
}

TEST_CASE("norm axioms on random segments") {
    CounterRng rng(2024);
    for (std::uint64_t u = 0; u < 200; ++u) {
        auto phi = random_segment(rng, 3 * u, 0.05, 60, 2);
        auto psi = random_segment(rng, 3 * u + 1, 0.05, 60, 2);
        const double r1 = 0.2, r2 = 0.9;

        // Power-of-two homogeneity is exact in floating point.
        Segment four(0.05, Eigen::MatrixXd(4.0 * phi.values()));
        CHECK(cr_norm(four, r1) == 4.0 * cr_norm(phi, r1));

        // Triangle inequality (1 ulp headroom for the summed values).
        Segment sum(0.05, Eigen::MatrixXd(phi.values() + psi.values()));
        CHECK(cr_norm(sum, r1) <= (cr_norm(phi, r1) + cr_norm(psi, r1)) * (1.0 + 1e-12));

        // Monotone in r: larger r weakens the weight.
        CHECK(cr_norm(phi, r2) <= cr_norm(phi, r1) * (1.0 + 1e-12));

        // The weighted norm never exceeds the sup norm.
        CHECK(cr_norm(phi, r1) <= sup_norm(phi) * (1.0 + 1e-12));
    }
    // Zero iff zero.
    auto zero = Segment::constant(0.05, 10, 0.0);
    CHECK(cr_norm(zero, 0.3) == 0.0);
}

TEST_CASE("segment extraction from a path") {
    // Hand-built 5-step path: pre-history 0 on [-0.4, 0], post values 1.
    const double h = 0.1;
    Segment pre = Segment::constant(h, 4, 0.0);
    Eigen::MatrixXd post = Eigen::MatrixXd::Ones(1, 5);
    Path path(pre, post);

    // t = 0 returns the initial data bit-exactly.
    CHECK(segment_at(path, 0.0).values() == pre.values());

    // t = T: newest entry equals the final path value.
    auto tail = segment_at(path, 0.5);
    CHECK(tail.newest()(0) == 1.0);

    // t = T_mem: the entry at theta = -T_mem is x(0) = 0, newer entries
    // walk into the simulated values.
    auto mid = segment_at(path, 0.4);
    CHECK(mid.values()(0, 0) == 0.0);           // theta = -0.4 -> x(0)
    CHECK(mid.values()(0, 1) == 1.0);           // theta = -0.3 -> x(0.1)
    CHECK(mid.newest()(0) == 1.0);

    // Off-grid times snap within half a step.
    CHECK(segment_at(path, 0.44).values() == segment_at(path, 0.4).values());
    CHECK_THROWS_AS(segment_at(path, std::nan("")), GridAlignmentError);
    CHECK_THROWS_AS(segment_at(path, 0.7), RangeError);
    CHECK_THROWS_AS(segment_at(path, -0.2), RangeError);
}

TEST_CASE("segment csv round trip") {
    auto seg = scalar_segment(0.5, 2, [](double th) { return 2.0 * th + 1.0; });
    std::ostringstream os;
    write_csv(seg, os);
    CHECK(os.str() == "theta,x_1\n-1,-1\n-0.5,0\n0,1\n");
}

TEST_CASE("decimation keeps the newest point") {
    auto seg = scalar_segment(0.01, 1000, [](double th) { return th; });
    auto thin = decimate(seg, 7);
    CHECK(thin.grid_step() == doctest::Approx(0.07));
    CHECK(thin.newest()(0) == seg.newest()(0));
    CHECK(thin.points() == 1000 / 7 + 1);
    // Every kept point matches the source at the same theta.
    for (int i = 0; i < thin.points(); ++i) {
        CHECK(thin.values()(0, i) ==
              doctest::Approx(seg.eval(thin.theta(i))(0)).epsilon(1e-12));
    }
}
