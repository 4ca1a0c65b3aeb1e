#include <doctest.h>

#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

#include "nsfde/errors.hpp"
#include "nsfde/measure.hpp"
#include "nsfde/rng.hpp"

using namespace nsfde;

namespace {

/// Adaptive Simpson quadrature, the independent oracle for the closed-form
/// exponential moments.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int depth = 40) {
    const double c = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fc = f(c);
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fhi, double fmid, double whole,
            int lvl) -> double {
        const double mid = 0.5 * (lo + hi);
        const double lmid = 0.5 * (lo + mid), rmid = 0.5 * (mid + hi);
        const double flm = f(lmid), frm = f(rmid);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (lvl <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
            return left + right + (left + right - whole) / 15.0;
        }
        return rec(lo, mid, flo, fmid, flm, left, lvl - 1) +
               rec(mid, hi, fmid, fhi, frm, right, lvl - 1);
    };
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    return rec(a, b, fa, fb, fc, whole, depth);
}

/// Quadrature + exact atom sum oracle for mu^(r).
double r_moment_oracle(const FadingMeasure& mu, double r) {
    double total = 0.0;
    for (const auto& a : mu.atoms()) total += a.weight * std::exp(-r * a.theta);
    for (const auto& e : mu.exps()) {
        const double span = 60.0 / (e.rho - r);  // tail below 1e-20 relative
        total += adaptive_simpson(
            [&](double th) { return std::exp(-r * th) * e.weight * e.rho * std::exp(e.rho * th); },
            -span, 0.0, 1e-14);
    }
    return total;
}

FadingMeasure random_mixture(const CounterRng& rng, std::uint64_t unit, double r_max) {
    DrawSeq draw(rng, 88, unit);
    const int n_atoms = static_cast<int>(draw.uniform(0.0, 3.0));
    const int n_exps = 1 + static_cast<int>(draw.uniform(0.0, 3.0));
    std::vector<MeasureAtom> atoms;
    std::vector<MeasureExp> exps;
    std::vector<double> weights;
    for (int i = 0; i < n_atoms + n_exps; ++i) weights.push_back(draw.uniform(0.1, 1.0));
    double total = 0.0;
    for (double w : weights) total += w;
    std::size_t wi = 0;
    for (int i = 0; i < n_atoms; ++i) {
        atoms.push_back({-draw.uniform(0.0, 5.0), weights[wi++] / total});
    }
    for (int i = 0; i < n_exps; ++i) {
        exps.push_back({draw.uniform(2.5 * r_max, 8.0), weights[wi++] / total});
    }
    return FadingMeasure(std::move(atoms), std::move(exps));
}

}  // namespace

TEST_CASE("moment closed forms") {
    // Probability normalization at r = 0, exactly.
    auto mix = FadingMeasure({{-1.0, 0.5}}, {{1.0, 0.5}});
    CHECK(r_moment(mix, 0.0) == 1.0);

    // Single atom at -1.
    CHECK(r_moment(FadingMeasure::point_mass(-1.0), 0.5) ==
          doctest::Approx(std::exp(0.5)).epsilon(1e-12));

    // Single exponential rho = 1 at r = 0.5: rho/(rho - r) = 2.
    CHECK(r_moment(FadingMeasure::single_exponential(1.0), 0.5) == doctest::Approx(2.0));

    // Boundary divergence.
    CHECK(!in_Mr(FadingMeasure::single_exponential(1.0), 1.0));
    CHECK(in_Mr(FadingMeasure::single_exponential(1.0), 0.5));
    CHECK(in_Mr(FadingMeasure::point_mass(-3.0), 100.0));
}

TEST_CASE("closed forms match the quadrature oracle on random mixtures") {
    CounterRng rng(5150);
    for (std::uint64_t u = 0; u < 40; ++u) {
        const auto mu = random_mixture(rng, u, 1.0);
        DrawSeq draw(rng, 89, u);
        const double r1 = draw.uniform(0.0, 1.0);
        const double r2 = r1 + draw.uniform(0.0, 1.0);
        const double m1 = r_moment(mu, r1);
        const double m2 = r_moment(mu, r2);
        CHECK(m1 == doctest::Approx(r_moment_oracle(mu, r1)).epsilon(1e-10));
        // Non-decreasing in r, equal to 1 at r = 0.
        CHECK(m2 >= m1 * (1.0 - 1e-12));
        CHECK(r_moment(mu, 0.0) == 1.0);
        // Monotone nesting of the moment classes.
        if (in_Mr(mu, r2)) CHECK(in_Mr(mu, r1));
    }
}

TEST_CASE("required depth") {
    // A pure atom just needs to be covered.
    CHECK(required_depth(FadingMeasure::point_mass(-2.0), 0.3, 1e-6, 0.05) ==
          doctest::Approx(2.0));

    // Exponential rho=1, r=0.25, absolute tol 1e-6: 2 e^{-T/2} < 1e-6.
    const double T = required_depth(FadingMeasure::single_exponential(1.0), 0.25, 1e-6, 0.01);
    CHECK(T == doctest::Approx(2.0 * std::log(2e6)).epsilon(1e-3));
    CHECK(tail_mass(FadingMeasure::single_exponential(1.0), 0.5, T) < 1e-6);

    // Mixture: the requirement is the max over components.
    auto mix = FadingMeasure({{-35.0, 0.5}}, {{1.0, 0.5}});
    CHECK(required_depth(mix, 0.25, 1e-6, 0.01) == doctest::Approx(35.0));

    CHECK_THROWS_AS(required_depth(FadingMeasure::single_exponential(0.4), 0.25, 1e-6, 0.01),
                    MeasureError);
}

TEST_CASE("segment integration against the measure") {
    auto mu = FadingMeasure({{-1.0, 0.25}}, {{1.0, 0.75}});
    const double r = 0.25;
    const double T = required_depth(mu, r, 1e-11, 0.01);
    const int depth = static_cast<int>(std::lround(T / 0.01));

    // Probability normalization: constants integrate to themselves.
    auto c2 = Segment::constant(0.01, depth, 2.0);
    const auto lin = integrate_segment(mu, c2, IntegrationMode::linear, r);
    CHECK(lin.linear(0) == doctest::Approx(2.0).epsilon(1e-10));
    const auto sq = integrate_segment(mu, c2, IntegrationMode::squared, r);
    CHECK(sq.squared == doctest::Approx(4.0).epsilon(1e-10));

    // Pure atom at -1 picks out phi(-1) = -1 for the ramp.
    auto ramp = Segment::from_function(0.01, 200, 1, [](double th) {
        return Eigen::VectorXd::Constant(1, th);
    });
    const auto atom_only =
        integrate_segment(FadingMeasure::point_mass(-1.0), ramp, IntegrationMode::linear, r);
    CHECK(atom_only.linear(0) == doctest::Approx(-1.0).epsilon(1e-12));

    // A window shorter than the measure needs signals truncation.
    auto tiny = Segment::constant(0.01, 50, 1.0);
    CHECK_THROWS_AS(integrate_segment(mu, tiny, IntegrationMode::squared, r),
                    TailTruncationError);
}

TEST_CASE("exponential quadrature matches Simpson on a smooth segment") {
    auto mu = FadingMeasure::single_exponential(1.5);
    const double r = 0.3;
    const double h = 0.005;
    const double T = required_depth(mu, r, 1e-12, h);
    auto f = [](double th) { return std::sin(1.3 * th) + 0.5 * th; };
    auto seg = Segment::from_function(h, static_cast<int>(std::lround(T / h)), 1,
                                      [&](double th) {
                                          return Eigen::VectorXd::Constant(1, f(th));
                                      });
    const auto got = integrate_segment(mu, seg, IntegrationMode::linear, r);
    const double want = adaptive_simpson(
        [&](double th) { return f(th) * 1.5 * std::exp(1.5 * th); }, -T, 0.0, 1e-13);
    CHECK(got.linear(0) == doctest::Approx(want).epsilon(1e-5));
}

TEST_CASE("measure json round trip") {
    auto mu = FadingMeasure({{-1.0, 0.5}}, {{1.0, 0.5}});
    const auto j = mu.to_json();
    CHECK(j.at("atoms").at(0).at("theta").get<double>() == -1.0);
    auto back = FadingMeasure::from_json(j);
    CHECK(back.atoms().size() == 1);
    CHECK(back.exps().size() == 1);
    CHECK(r_moment(back, 0.4) == r_moment(mu, 0.4));

    CHECK_THROWS_AS(FadingMeasure::from_json(nlohmann::json::parse(
                        R"({"atoms":[{"theta":-1.0,"w":0.5}],"exp":[{"rho":1.0,"w":0.6}]})")),
                    MeasureError);
}
