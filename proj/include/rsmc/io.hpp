#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rsmc/estimation.hpp"
#include "rsmc/hyptest.hpp"
#include "rsmc/linalg.hpp"

namespace rsmc::io {

class IoError : public Error {
public:
    using Error::Error;
};

inline std::ifstream open_in(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open '" + file + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::string& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open '" + file + "' for writing");
    return out;
}

inline bool skip_line(const std::string& line) {
    const auto p = line.find_first_not_of(" \t\r");
    return p == std::string::npos || line[p] == '#';
}

// Paths: one one-based state index per line. Returns zero-based states.
inline std::vector<int> read_path(std::istream& in, const std::string& name = "<path>") {
    std::vector<int> states;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skip_line(line)) continue;
        std::istringstream ls(line);
        long v = 0;
        if (!(ls >> v) || v < 1) {
            throw IoError(name + ":" + std::to_string(lineno) + ": expected a state index >= 1");
        }
        states.push_back(static_cast<int>(v - 1));
    }
    return states;
}

inline std::vector<int> read_path(const std::string& file) {
    auto in = open_in(file);
    return read_path(in, file);
}

inline void write_path(std::ostream& out, const std::vector<int>& states) {
    for (int s : states) out << (s + 1) << '\n';
}

// Whitespace-delimited dense rows.
inline Matrix read_matrix(std::istream& in, const std::string& name = "<matrix>") {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (skip_line(line)) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        double v = 0.0;
        while (ls >> v) row.push_back(v);
        if (!ls.eof()) throw IoError(name + ": non-numeric entry in row " + std::to_string(rows.size() + 1));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(name + ": empty matrix");
    const auto cols = rows.front().size();
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw IoError(name + ": ragged rows");
        for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return m;
}

inline Matrix read_matrix(const std::string& file) {
    auto in = open_in(file);
    return read_matrix(in, file);
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void write_matrix(std::ostream& out, const Matrix& m, char sep = ' ') {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << sep;
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

// Gap tables: "k probability" per line.
inline std::vector<double> read_gap_table(std::istream& in, const std::string& name = "<table>") {
    std::vector<double> pmf;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skip_line(line)) continue;
        std::istringstream ls(line);
        long k = 0;
        double p = 0.0;
        if (!(ls >> k >> p) || k < 0) {
            throw IoError(name + ":" + std::to_string(lineno) + ": expected 'k probability'");
        }
        if (static_cast<std::size_t>(k) >= pmf.size()) pmf.resize(static_cast<std::size_t>(k) + 1, 0.0);
        pmf[static_cast<std::size_t>(k)] += p;
    }
    if (pmf.empty()) throw IoError(name + ": empty gap table");
    return pmf;
}

inline std::vector<double> read_gap_table(const std::string& file) {
    auto in = open_in(file);
    return read_gap_table(in, file);
}

inline constexpr const char* kVecHeader =
    "# vec ordering: column-stacking, (i,j) -> (j-1)*N + i, one-based";

// pi_hat.csv, q_hat.csv, sigma.csv under dir.
inline void write_estimates(const std::string& dir, const EmpiricalEstimates& est,
                            const CovarianceEstimate* sigma = nullptr) {
    {
        auto out = open_out(dir + "/pi_hat.csv");
        out << "state,pi_hat\n";
        for (Index i = 0; i < est.pi_hat.size(); ++i) out << (i + 1) << ',' << format_double(est.pi_hat(i)) << '\n';
    }
    {
        auto out = open_out(dir + "/q_hat.csv");
        out << "# rows: from-state, columns: to-state\n";
        write_matrix(out, est.q_hat, ',');
    }
    if (sigma) {
        auto out = open_out(dir + "/sigma.csv");
        out << kVecHeader << '\n';
        write_matrix(out, sigma->sigma, ',');
    }
}

inline std::string states_list(const std::vector<int>& s) {
    std::string out;
    for (int v : s) out += (out.empty() ? "" : ";") + std::to_string(v);
    return out;
}

inline void write_report_csv(std::ostream& out, const TestReportP& r) {
    const auto& d = r.diagnostics;
    out << "test,n,alpha,statistic,statistic_ls,quantile,quantile_lower,quantile_upper,p_value,decision,"
           "dim_model,dim_h0,rank_e,rank_e0,cond_e0,lambda_max_w,n_weights,a2_max_rank,a2_stable,"
           "high_variance_states\n";
    out << "affine," << r.n << ',' << format_double(r.alpha) << ',' << format_double(r.statistic) << ','
        << format_double(r.statistic_least_squares) << ',' << format_double(r.quantile.value) << ','
        << format_double(r.quantile.lower) << ',' << format_double(r.quantile.upper) << ','
        << format_double(r.p_value) << ',' << to_string(r.decision) << ',' << d.dim_model << ','
        << d.dim_null << ',' << d.rank_e << ',' << d.rank_e0 << ',' << format_double(d.condition_e0) << ','
        << format_double(d.lambda_max_w) << ',' << r.law.weights.size() << ',' << d.a2_max_rank << ','
        << (d.a2_stable ? 1 : 0) << ',' << states_list(d.high_variance_states) << '\n';
}

inline void write_report_csv(std::ostream& out, const TestReportMu& r) {
    const auto& d = r.diagnostics;
    out << "test,mu0,n,alpha,statistic,quantile,quantile_lower,quantile_upper,p_value,decision,"
           "dim_model,rank,condition,lambda_max_cov,n_weights,high_variance_states\n";
    out << "gap," << r.mu0 << ',' << r.n << ',' << format_double(r.alpha) << ','
        << format_double(r.statistic) << ',' << format_double(r.quantile.value) << ','
        << format_double(r.quantile.lower) << ',' << format_double(r.quantile.upper) << ','
        << format_double(r.p_value) << ',' << to_string(r.decision) << ',' << d.dim_model << ','
        << d.rank << ',' << format_double(d.condition) << ',' << format_double(d.lambda_max_cov) << ','
        << r.law.weights.size() << ',' << states_list(d.high_variance_states) << '\n';
}

inline void write_summary(std::ostream& out, const TestReportP& r) {
    const auto& d = r.diagnostics;
    out << "Affine constraint test on P\n"
        << "  n = " << r.n << ", alpha = " << r.alpha << "\n"
        << "  model dimension d = " << d.dim_model << ", under H0 d - k = " << d.dim_null << "\n"
        << "  rank Delta(Q_hat) Phi = " << d.rank_e << ", rank Delta(Q_hat) Phi0 = " << d.rank_e0 << "\n"
        << "  S = " << format_double(r.statistic) << " (least-squares route "
        << format_double(r.statistic_least_squares) << ")\n";
    if (r.decision == Decision::unusable) {
        out << "  limit law is degenerate (lambda_max(W_hat) = " << format_double(d.lambda_max_w)
            << "): test abstains\n";
    } else {
        out << "  quantile u_{1-alpha} = " << format_double(r.quantile.value) << " ["
            << format_double(r.quantile.lower) << ", " << format_double(r.quantile.upper) << "]\n"
            << "  p-value = " << format_double(r.p_value) << "\n";
    }
    out << "  decision: " << to_string(r.decision) << "\n";
    if (!d.a2_stable) out << "  warning: rank of Delta(Q_hat) Phi is not maximal under perturbation\n";
    if (!d.high_variance_states.empty()) {
        out << "  warning: states with a single observed transition: " << states_list(d.high_variance_states) << "\n";
    }
}

inline void write_summary(std::ostream& out, const TestReportMu& r) {
    const auto& d = r.diagnostics;
    out << "Goodness-of-fit test on the gap distribution\n"
        << "  H0: mu = " << r.mu0 << "\n"
        << "  n = " << r.n << ", alpha = " << r.alpha << "\n"
        << "  model dimension d = " << d.dim_model << ", condition of Delta(Q_hat) Phi = "
        << format_double(d.condition) << "\n"
        << "  T = " << format_double(r.statistic) << "\n";
    if (r.decision == Decision::unusable) {
        out << "  limit law is degenerate: test abstains\n";
    } else {
        out << "  quantile u_{1-alpha} = " << format_double(r.quantile.value) << "\n"
            << "  p-value = " << format_double(r.p_value) << "\n";
    }
    out << "  decision: " << to_string(r.decision) << "\n";
}

}  // namespace rsmc::io
