#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rsmc/linalg.hpp"
#include "rsmc/rng.hpp"

namespace rsmc {

enum class GapFamily { poisson, point_mass, table };

// Law mu of the number of hidden steps between two observations.
// The pmf is materialized on 0..K, K the smallest index with tail mass
// below 1e-12 and first-moment tail below 1e-10, then renormalized.
class GapDistribution {
public:
    static constexpr Index kMaxTruncation = 10000;
    static constexpr double kTailMass = 1e-12;
    static constexpr double kTailMoment = 1e-10;

    static GapDistribution poisson(double lambda) {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error("poisson: lambda must be > 0");
        std::vector<double> raw;
        const double log_lambda = std::log(lambda);
        for (Index k = 0; k <= kMaxTruncation + 1; ++k) {
            const double lp = static_cast<double>(k) * log_lambda - lambda -
                              std::lgamma(static_cast<double>(k) + 1.0);
            raw.push_back(std::exp(lp));
            if (static_cast<double>(k) > lambda && lp < -745.0) break;
        }
        GapDistribution mu = from_raw(std::move(raw), GapFamily::poisson, lambda);
        mu.mean_ = lambda;
        return mu;
    }

    static GapDistribution point_mass(Index j) {
        if (j < 0) throw Error("point_mass: index must be >= 0");
        if (j > kMaxTruncation) throw TruncationFailure("point_mass: beyond truncation cap");
        std::vector<double> raw(static_cast<std::size_t>(j + 1), 0.0);
        raw.back() = 1.0;
        return from_raw(std::move(raw), GapFamily::point_mass, static_cast<double>(j));
    }

    // pmf(k) for k = 0..size-1; must sum to 1 within 1e-6.
    static GapDistribution table(std::vector<double> pmf) {
        if (pmf.empty()) throw Error("table: empty pmf");
        double total = 0.0;
        for (double v : pmf) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw Error("table: negative or non-finite mass");
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-6) {
            throw Error("table: probabilities sum to " + std::to_string(total));
        }
        for (double& v : pmf) v /= total;
        return from_raw(std::move(pmf), GapFamily::table, 0.0);
    }

    GapFamily family() const { return family_; }
    double parameter() const { return parameter_; }
    const std::vector<double>& pmf() const { return pmf_; }
    double operator()(Index k) const {
        return k >= 0 && k < static_cast<Index>(pmf_.size()) ? pmf_[static_cast<std::size_t>(k)] : 0.0;
    }
    double mean() const { return mean_; }
    Index truncation() const { return static_cast<Index>(pmf_.size()) - 1; }

    std::string describe() const {
        std::ostringstream os;
        switch (family_) {
            case GapFamily::poisson: os << "poisson(" << parameter_ << ")"; break;
            case GapFamily::point_mass: os << "point_mass(" << parameter_ << ")"; break;
            case GapFamily::table: os << "table(K=" << truncation() << ")"; break;
        }
        return os.str();
    }

    template <class Urbg>
    Index sample(Urbg& rng) const {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const double u = u01(rng);
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return static_cast<Index>(it - cdf_.begin());
    }

private:
    static GapDistribution from_raw(std::vector<double> raw, GapFamily family, double parameter) {
        double total = 0.0;
        for (double v : raw) total += v;
        const double missing = std::max(0.0, 1.0 - total);
        // suffix sums past index K, plus whatever was never materialized
        const auto len = raw.size();
        std::vector<double> tail_mass(len + 1, 0.0), tail_moment(len + 1, 0.0);
        for (std::size_t k = len; k-- > 0;) {
            tail_mass[k] = tail_mass[k + 1] + raw[k];
            tail_moment[k] = tail_moment[k + 1] + static_cast<double>(k) * raw[k];
        }
        std::optional<std::size_t> cut;
        for (std::size_t k = 0; k < len && k <= static_cast<std::size_t>(kMaxTruncation); ++k) {
            const double tm = tail_mass[k + 1] + missing;
            const double tmom = tail_moment[k + 1] + missing * static_cast<double>(len);
            if (tm < kTailMass && tmom < kTailMoment) {
                cut = k;
                break;
            }
        }
        if (!cut) {
            throw TruncationFailure("gap distribution tail not negligible within K_max = " +
                                    std::to_string(kMaxTruncation));
        }
        GapDistribution mu;
        mu.family_ = family;
        mu.parameter_ = parameter;
        mu.pmf_.assign(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(*cut + 1));
        double kept = 0.0;
        for (double v : mu.pmf_) kept += v;
        double mean = 0.0, acc = 0.0;
        mu.cdf_.resize(mu.pmf_.size());
        for (std::size_t k = 0; k < mu.pmf_.size(); ++k) {
            mu.pmf_[k] /= kept;
            mean += static_cast<double>(k) * mu.pmf_[k];
            acc += mu.pmf_[k];
            mu.cdf_[k] = acc;
        }
        mu.cdf_.back() = 1.0;
        mu.mean_ = mean;
        return mu;
    }

    GapFamily family_ = GapFamily::point_mass;
    double parameter_ = 0.0;
    std::vector<double> pmf_;
    std::vector<double> cdf_;
    double mean_ = 0.0;
};

// Q = G_mu(P) = sum_l mu(l) P^l. P need not be stochastic.
inline Matrix g_mu(const Matrix& p, const GapDistribution& mu) {
    if (p.rows() != p.cols()) throw DimensionError("g_mu: P must be square");
    const Index n = p.rows();
    Matrix power = Matrix::Identity(n, n);
    Matrix q = mu(0) * power;
    for (Index l = 1; l <= mu.truncation(); ++l) {
        power = power * p;
        q += mu(l) * power;
    }
    return q;
}

inline Matrix g_mu(const StochasticMatrix& p, const GapDistribution& mu) {
    return g_mu(p.matrix(), mu);
}

// Gamma = sum_{k>=1} (sum_{j=1..k} (P^{j-1})^T (x) P^{k-j}) mu(k), the Jacobian of
// vec(G_mu(P)) with respect to vec(P). Regrouped as sum_a (P^a)^T (x) R_a with
// R_a = sum_b mu(a+b+1) P^b, so each power of P is formed once.
inline Matrix gamma_matrix(const Matrix& p, const GapDistribution& mu) {
    if (p.rows() != p.cols()) throw DimensionError("gamma_matrix: P must be square");
    const Index n = p.rows();
    const Index kmax = mu.truncation();
    Matrix gamma = Matrix::Zero(n * n, n * n);
    if (kmax < 1) return gamma;

    std::vector<Matrix> powers;
    powers.reserve(static_cast<std::size_t>(kmax));
    powers.push_back(Matrix::Identity(n, n));
    for (Index a = 1; a < kmax; ++a) powers.push_back(powers.back() * p);

    for (Index a = 0; a < kmax; ++a) {
        Matrix r = Matrix::Zero(n, n);
        for (Index b = 0; a + b + 1 <= kmax; ++b) {
            const double w = mu(a + b + 1);
            if (w != 0.0) r += w * powers[static_cast<std::size_t>(b)];
        }
        if (r.isZero(0.0)) continue;
        gamma += kron(powers[static_cast<std::size_t>(a)].transpose(), r);
    }
    return gamma;
}

inline Matrix gamma_matrix(const StochasticMatrix& p, const GapDistribution& mu) {
    return gamma_matrix(p.matrix(), mu);
}

// Observed chain Y_k = X_{T_k}, states zero-based.
struct PathSample {
    std::vector<int> observed;
    // Filled only when hidden data is retained.
    std::vector<int> hidden;
    std::vector<Index> gaps;
    std::uint64_t seed = 0;
    Index n_states = 0;
};

// Row-wise cumulative sums for inverse-CDF stepping.
class TransitionSampler {
public:
    explicit TransitionSampler(const StochasticMatrix& p) : n_(p.n_states()), cum_(p.n_states()) {
        for (Index i = 0; i < n_; ++i) {
            auto& row = cum_[static_cast<std::size_t>(i)];
            row.resize(static_cast<std::size_t>(n_));
            double acc = 0.0;
            for (Index j = 0; j < n_; ++j) {
                acc += p(i, j);
                row[static_cast<std::size_t>(j)] = acc;
            }
            row.back() = 1.0 + 1e-15;
        }
    }

    template <class Urbg>
    int step(int from, Urbg& rng) const {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const auto& row = cum_[static_cast<std::size_t>(from)];
        const double u = u01(rng);
        auto it = std::upper_bound(row.begin(), row.end(), u);
        return static_cast<int>(it - row.begin());
    }

    template <class Urbg>
    static int draw(const Vector& dist, Urbg& rng) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        double u = u01(rng), acc = 0.0;
        for (Index i = 0; i < dist.size(); ++i) {
            acc += dist(i);
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(dist.size() - 1);
    }

private:
    Index n_;
    std::vector<std::vector<double>> cum_;
};

inline PathSample simulate_observed(const StochasticMatrix& p, const GapDistribution& mu, Index n,
                                    const Vector& initial, std::uint64_t seed,
                                    bool keep_hidden = false) {
    if (n < 2) throw Error("simulate_observed: n must be >= 2");
    if (initial.size() != p.n_states()) throw DimensionError("simulate_observed: initial has wrong size");
    Engine rng = make_engine(seed);
    const TransitionSampler sampler(p);

    PathSample out;
    out.seed = seed;
    out.n_states = p.n_states();
    out.observed.reserve(static_cast<std::size_t>(n));
    int x = TransitionSampler::draw(initial, rng);
    if (keep_hidden) {
        out.hidden.push_back(x);
        out.gaps.reserve(static_cast<std::size_t>(n));
    }
    for (Index k = 0; k < n; ++k) {
        const Index gap = mu.sample(rng);
        for (Index s = 0; s < gap; ++s) {
            x = sampler.step(x, rng);
            if (keep_hidden) out.hidden.push_back(x);
        }
        if (keep_hidden) out.gaps.push_back(gap);
        out.observed.push_back(x);
    }
    return out;
}

// Default start: the invariant distribution of P.
inline PathSample simulate_observed(const StochasticMatrix& p, const GapDistribution& mu, Index n,
                                    std::uint64_t seed, bool keep_hidden = false) {
    return simulate_observed(p, mu, n, stationary_distribution(p), seed, keep_hidden);
}

}  // namespace rsmc
