#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rsmc/io.hpp"
#include "rsmc/models.hpp"
#include "rsmc/sampling.hpp"

// Text descriptions of models, hypotheses and gap laws, as used by the CLI
// and experiment configs.
//
//   model:       comma-separated builders, row sums always included
//                stochastic | support-p0 | support:FILE | symmetric |
//                doubly-stochastic | zero-diagonal | upper-triangular |
//                lower-triangular | fixed:I:J:C | rows:FILE
//   hypothesis:  the same builders, or none | point-p0 | point:FILE
//   gaps:        poisson:LAMBDA | point:J | table:FILE
//
// rows:FILE holds one constraint per line, N^2 coefficients (vec order) then b.
// Indices I, J are one-based.
namespace rsmc::specs {

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(sep, start);
        const auto end = pos == std::string_view::npos ? s.size() : pos;
        std::string tok(s.substr(start, end - start));
        const auto a = tok.find_first_not_of(" \t");
        const auto b = tok.find_last_not_of(" \t");
        tok = a == std::string::npos ? std::string() : tok.substr(a, b - a + 1);
        if (!tok.empty()) out.push_back(tok);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error("bad number '" + s + "' in " + what);
    }
}

// Reflected random walk: row 1 = e_2, row N = e_{N-1}, interior rows 1/2 on each neighbour.
inline StochasticMatrix reflected_walk(Index n) {
    if (n < 3) throw Error("reflected_walk: need N >= 3");
    Matrix p = Matrix::Zero(n, n);
    p(0, 1) = 1.0;
    p(n - 1, n - 2) = 1.0;
    for (Index i = 1; i + 1 < n; ++i) {
        p(i, i - 1) = 0.5;
        p(i, i + 1) = 0.5;
    }
    return StochasticMatrix(std::move(p));
}

inline GapDistribution parse_gaps(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string family = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (family == "poisson") return GapDistribution::poisson(to_double(arg, spec));
    if (family == "point") return GapDistribution::point_mass(static_cast<Index>(to_double(arg, spec)));
    if (family == "table") return GapDistribution::table(io::read_gap_table(arg));
    throw Error("unknown gap distribution '" + spec + "' (poisson:L | point:J | table:FILE)");
}

inline std::vector<std::pair<Index, Index>> support_of(const Matrix& m) {
    std::vector<std::pair<Index, Index>> out;
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            if (std::abs(m(i, j)) > kSupportThreshold) out.emplace_back(i, j);
        }
    }
    return out;
}

inline Matrix square_matrix_file(const std::string& file, Index n) {
    Matrix m = io::read_matrix(file);
    if (m.rows() != n || m.cols() != n) {
        throw Error(file + ": expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    }
    return m;
}

// Builders named in a model or hypothesis spec, excluding the point forms.
inline std::vector<ConstraintBlock> parse_blocks(const std::string& spec, Index n) {
    std::vector<ConstraintBlock> blocks;
    for (const auto& tok : split(spec, ',')) {
        const auto parts = split(tok, ':');
        const std::string& name = parts.front();
        if (name == "stochastic" || name == "none") continue;
        if (name == "support-p0") {
            blocks.push_back(builders::support_model(n, reflected_walk(n).support()));
        } else if (name == "support" && parts.size() == 2) {
            blocks.push_back(builders::support_model(n, support_of(square_matrix_file(parts[1], n))));
        } else if (name == "symmetric") {
            blocks.push_back(builders::symmetric_model(n));
        } else if (name == "doubly-stochastic") {
            blocks.push_back(builders::doubly_stochastic(n));
        } else if (name == "zero-diagonal") {
            blocks.push_back(builders::zero_diagonal(n));
        } else if (name == "upper-triangular") {
            blocks.push_back(builders::triangular(n, true));
        } else if (name == "lower-triangular") {
            blocks.push_back(builders::triangular(n, false));
        } else if (name == "fixed" && parts.size() == 4) {
            const auto i = static_cast<Index>(to_double(parts[1], tok)) - 1;
            const auto j = static_cast<Index>(to_double(parts[2], tok)) - 1;
            blocks.push_back(builders::fixed_entries(n, {{i, j, to_double(parts[3], tok)}}));
        } else if (name == "rows" && parts.size() == 2) {
            const Matrix rows = io::read_matrix(parts[1]);
            if (rows.cols() != n * n + 1) {
                throw Error(parts[1] + ": each row needs N^2 coefficients followed by b");
            }
            blocks.push_back({rows.leftCols(n * n), rows.col(n * n), "rows:" + parts[1]});
        } else {
            throw Error("unknown constraint builder '" + tok + "'");
        }
    }
    return blocks;
}

inline AffineModel parse_model(const std::string& spec, Index n) {
    return AffineModel::compose(n, parse_blocks(spec, n));
}

inline HypothesisSpec parse_hypothesis(const std::string& spec, const AffineModel& model) {
    const Index n = model.n_states();
    const auto toks = split(spec, ',');
    for (const auto& tok : toks) {
        if (tok == "point-p0" || tok.rfind("point:", 0) == 0) {
            if (toks.size() != 1) throw Error("point hypotheses cannot be combined with other builders");
            const Matrix p = tok == "point-p0" ? reflected_walk(n).matrix()
                                               : square_matrix_file(tok.substr(6), n);
            return HypothesisSpec::point(model, vec(p));
        }
    }
    return HypothesisSpec::make(model, parse_blocks(spec, n));
}

}  // namespace rsmc::specs
