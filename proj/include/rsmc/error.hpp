#pragma once

#include <stdexcept>
#include <string>

namespace rsmc {

// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Matrix failed the row-stochastic checks.
class NotStochastic : public Error {
public:
    using Error::Error;
};

// Invariant distribution is not unique or not positive.
class NotIrreducible : public Error {
public:
    using Error::Error;
};

// Am = b has no solution.
class InfeasibleModel : public Error {
public:
    using Error::Error;
};

// Hypothesis incompatible with, or redundant relative to, its model.
class IllPosedHypothesis : public Error {
public:
    IllPosedHypothesis(const std::string& what, long rank_deficit)
        : Error(what), rank_deficit_(rank_deficit) {}
    long rank_deficit() const { return rank_deficit_; }

private:
    long rank_deficit_;
};

// Delta(Q_hat) * basis is rank deficient.
class NotIdentifiable : public Error {
public:
    NotIdentifiable(const std::string& what, long rank, long columns)
        : Error(what), rank_(rank), columns_(columns) {}
    long rank() const { return rank_; }
    long columns() const { return columns_; }

private:
    long rank_;
    long columns_;
};

// Some state has no outgoing transition in the observed path.
class PartialEstimate : public Error {
public:
    using Error::Error;
};

// Gap distribution tail cannot be truncated within the hard cap.
class TruncationFailure : public Error {
public:
    using Error::Error;
};

// The two routes to the statistic S disagree beyond tolerance.
class FormDisagreement : public Error {
public:
    using Error::Error;
};

// W has eigenvalues well below zero.
class IndefiniteMatrix : public Error {
public:
    using Error::Error;
};

}  // namespace rsmc
