#include "nsfde/dl.hpp"

#include <algorithm>
#include <cmath>

#include "nsfde/errors.hpp"
#include "nsfde/numeric.hpp"
#include "nsfde/parallel.hpp"

namespace nsfde {

DlFunctional make_dl_functional(const CounterRng& rng, std::uint64_t index,
                                int points, int dim, double grid_step, double r) {
    DrawSeq draw(rng, streams::kDlFamily, index);
    DlFunctional g;
    g.a0 = draw.uniform(-2.0, 2.0);

    const double u = draw.uniform();
    const int n_terms = (u < 0.4) ? 1 : 2 + static_cast<int>(draw.uniform(0.0, 5.0));
    double total = 0.0;
    std::vector<double> raw(static_cast<std::size_t>(n_terms));
    for (int i = 0; i < n_terms; ++i) {
        // The newest coordinate carries the full weight e^{0} = 1, so bias
        // the draw toward theta = 0; the supremum over the family improves.
        int idx;
        if (draw.uniform() < 0.6) {
            idx = points - 1;
        } else {
            idx = static_cast<int>(draw.uniform_int(points));
        }
        g.point_index.push_back(idx);
        g.component.push_back(static_cast<int>(draw.uniform_int(dim)));
        const double sign = (draw.uniform() < 0.5) ? -1.0 : 1.0;
        raw[static_cast<std::size_t>(i)] = sign * draw.uniform(0.1, 1.0);
        total += std::abs(raw[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < n_terms; ++i) {
        const double a = raw[static_cast<std::size_t>(i)] / total;  // sum |a_i| = 1
        const double theta = -(points - 1 - g.point_index[static_cast<std::size_t>(i)]) * grid_step;
        g.coeff.push_back(a * std::exp(r * theta));
    }
    return g;
}

double evaluate(const DlFunctional& g, const Segment& seg) {
    double v = g.a0;
    for (std::size_t i = 0; i < g.coeff.size(); ++i) {
        v += g.coeff[i] * seg.values()(g.component[i], g.point_index[i]);
    }
    return std::clamp(v, -1.0, 1.0);
}

namespace {

double family_mean_gap(std::span<const Segment> a, std::span<const Segment> b,
                       double r, int family_size, std::uint64_t seed) {
    if (a.empty() || b.empty()) throw RangeError("empirical_dl: empty sample");
    const Segment& ref = a.front();
    for (const auto& s : a) {
        if (!s.same_shape(ref)) throw ShapeMismatchError("empirical_dl: sample_a shapes differ");
    }
    for (const auto& s : b) {
        if (!s.same_shape(ref)) throw ShapeMismatchError("empirical_dl: sample shapes differ");
    }
    CounterRng rng(seed);
    std::vector<double> gaps(static_cast<std::size_t>(family_size));
    parallel_for(family_size, 1, [&](long f) {
        const DlFunctional g = make_dl_functional(rng, static_cast<std::uint64_t>(f),
                                                  ref.points(), ref.dim(), ref.grid_step(), r);
        std::vector<double> va(a.size()), vb(b.size());
        for (std::size_t i = 0; i < a.size(); ++i) va[i] = evaluate(g, a[i]);
        for (std::size_t i = 0; i < b.size(); ++i) vb[i] = evaluate(g, b[i]);
        const double ma = pairwise_sum(va) / static_cast<double>(a.size());
        const double mb = pairwise_sum(vb) / static_cast<double>(b.size());
        gaps[static_cast<std::size_t>(f)] = std::abs(ma - mb);
    });
    double best = 0.0;
    for (double v : gaps) best = std::max(best, v);
    return best;
}

}  // namespace

double empirical_dl(std::span<const Segment> sample_a, std::span<const Segment> sample_b,
                    double r, int family_size, std::uint64_t seed) {
    return family_mean_gap(sample_a, sample_b, r, family_size, seed);
}

double split_half_floor(std::span<const Segment> sample, double r, int family_size,
                        std::uint64_t seed, int n_splits) {
    if (sample.size() < 2) return 0.0;
    CounterRng rng(seed);
    std::vector<double> floors;
    for (int s = 0; s < n_splits; ++s) {
        // Seeded random permutation, split in half.
        DrawSeq draw(rng, streams::kDlSplit, static_cast<std::uint64_t>(s));
        std::vector<std::size_t> perm(sample.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        for (std::size_t i = perm.size(); i > 1; --i) {
            std::swap(perm[i - 1], perm[static_cast<std::size_t>(draw.uniform_int(static_cast<long>(i)))]);
        }
        const std::size_t half = sample.size() / 2;
        std::vector<Segment> first, second;
        first.reserve(half);
        second.reserve(sample.size() - half);
        for (std::size_t i = 0; i < sample.size(); ++i) {
            (i < half ? first : second).push_back(sample[perm[i]]);
        }
        floors.push_back(empirical_dl(first, second, r, family_size, seed));
    }
    return pairwise_sum(floors) / static_cast<double>(floors.size());
}

}  // namespace nsfde
