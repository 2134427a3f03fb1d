#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "rsmc/linalg.hpp"
#include "rsmc/rng.hpp"

namespace rsmc {

// Law of eps^T W eps, eps standard Gaussian, represented by the eigenvalues of W.
struct QuadFormLaw {
    std::vector<double> weights;  // positive, descending
    Index dim = 0;
    double lambda_max = 0.0;

    bool degenerate() const { return weights.empty(); }
    double trace() const {
        double t = 0.0;
        for (double w : weights) t += w;
        return t;
    }
};

inline QuadFormLaw law_from_weights(std::vector<double> weights, Index dim = 0) {
    std::erase_if(weights, [](double w) { return !(w > 0.0); });
    std::sort(weights.begin(), weights.end(), std::greater<>());
    QuadFormLaw law;
    law.dim = dim == 0 ? static_cast<Index>(weights.size()) : dim;
    law.lambda_max = weights.empty() ? 0.0 : weights.front();
    law.weights = std::move(weights);
    return law;
}

// Weights are the eigenvalues above eig_tol * lambda_max. If lambda_max itself is
// below zero_tol the law is a Dirac mass at 0.
inline QuadFormLaw law_from_matrix(const Matrix& w, double eig_tol = 1e-8, double zero_tol = 1e-10) {
    if (w.rows() != w.cols()) throw DimensionError("law_from_matrix: W must be square");
    QuadFormLaw law;
    law.dim = w.rows();
    if (w.size() == 0) return law;
    const Matrix sym = 0.5 * (w + w.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    const Vector& ev = eig.eigenvalues();  // ascending
    const double lmax = ev(ev.size() - 1);
    const double lmin = ev(0);
    if (lmin < -1e-6 * std::max(1.0, lmax)) {
        throw IndefiniteMatrix("law_from_matrix: W has eigenvalue " + std::to_string(lmin));
    }
    law.lambda_max = std::max(lmax, 0.0);
    if (lmax < zero_tol) return law;
    for (Index i = ev.size() - 1; i >= 0; --i) {
        if (ev(i) > eig_tol * lmax) law.weights.push_back(ev(i));
    }
    return law;
}

struct QuantileEstimate {
    double value = 0.0;
    // Distribution-free 95% band from order statistics.
    double lower = 0.0;
    double upper = 0.0;
    bool degenerate = false;

    double standard_error() const { return (upper - lower) / (2.0 * 1.959963984540054); }
};

// Sorted Monte Carlo draws of sum_i w_i z_i^2.
class QuadFormSample {
public:
    static constexpr Index kChunk = 4096;

    QuadFormSample() = default;

    // Draws come in chunks seeded from (seed, chunk index), so the result does
    // not depend on how chunks are scheduled.
    QuadFormSample(const QuadFormLaw& law, Index draws, std::uint64_t seed) {
        if (draws < 1) throw Error("QuadFormSample: need at least one draw");
        draws_.assign(static_cast<std::size_t>(draws), 0.0);
        degenerate_ = law.degenerate();
        if (degenerate_) return;
        const auto& w = law.weights;
        boost::random::normal_distribution<double> normal(0.0, 1.0);
        for (Index c = 0; c * kChunk < draws; ++c) {
            Engine rng = make_engine(substream_seed(seed, {static_cast<std::uint64_t>(c)}));
            normal.reset();
            const Index end = std::min(draws, (c + 1) * kChunk);
            for (Index d = c * kChunk; d < end; ++d) {
                double s = 0.0;
                for (double wi : w) {
                    const double z = normal(rng);
                    s += wi * z * z;
                }
                draws_[static_cast<std::size_t>(d)] = s;
            }
        }
        std::sort(draws_.begin(), draws_.end());
    }

    Index size() const { return static_cast<Index>(draws_.size()); }
    bool degenerate() const { return degenerate_; }
    const std::vector<double>& sorted_draws() const { return draws_; }

    // Smallest draw x with empirical cdf(x) >= level.
    QuantileEstimate quantile(double level) const {
        if (!(level > 0.0 && level < 1.0)) throw Error("quantile: level must lie in (0,1)");
        QuantileEstimate q;
        q.degenerate = degenerate_;
        if (degenerate_) return q;
        const double m = static_cast<double>(draws_.size());
        auto at = [&](double pos) {
            const auto i = static_cast<std::ptrdiff_t>(std::clamp(std::ceil(pos) - 1.0, 0.0, m - 1.0));
            return draws_[static_cast<std::size_t>(i)];
        };
        const double half = 1.959963984540054 * std::sqrt(m * level * (1.0 - level));
        q.value = at(m * level);
        q.lower = at(m * level - half);
        q.upper = at(m * level + half);
        return q;
    }

    // Fraction of draws >= s.
    double p_value(double s) const {
        auto it = std::lower_bound(draws_.begin(), draws_.end(), s);
        return static_cast<double>(draws_.end() - it) / static_cast<double>(draws_.size());
    }

    // Fraction of draws <= s.
    double cdf(double s) const {
        auto it = std::upper_bound(draws_.begin(), draws_.end(), s);
        return static_cast<double>(it - draws_.begin()) / static_cast<double>(draws_.size());
    }

private:
    std::vector<double> draws_;
    bool degenerate_ = false;
};

inline QuantileEstimate quantile(const QuadFormLaw& law, double level, Index draws, std::uint64_t seed) {
    return QuadFormSample(law, draws, seed).quantile(level);
}

inline double p_value(const QuadFormLaw& law, double s, Index draws, std::uint64_t seed) {
    return QuadFormSample(law, draws, seed).p_value(s);
}

}  // namespace rsmc
