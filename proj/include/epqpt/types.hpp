#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace epqpt {

using cplx = std::complex<double>;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

// Rejected arguments (bad N, bad range, malformed flags).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Any numerical procedure that could not deliver its contract.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Adaptive path stepping fell below the floor; an EP sits on or next to the path.
class StepUnderflow : public NumericalError {
public:
    StepUnderflow(const std::string& msg, cplx where)
        : NumericalError(msg), where_(where) {}
    cplx where() const { return where_; }

private:
    cplx where_;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& msg, std::vector<cplx> partial)
        : NumericalError(msg), partial_(std::move(partial)) {}
    const std::vector<cplx>& partial() const { return partial_; }

private:
    std::vector<cplx> partial_;
};

}  // namespace epqpt
