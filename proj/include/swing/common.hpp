#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace swing {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using IVec = Eigen::VectorXi;

// Error taxonomy. InputError maps to CLI exit code 1, NumericalError to 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InputError : Error {
    using Error::Error;
};
struct ParseError : InputError {
    using InputError::InputError;
};
struct ValidationError : InputError {
    using InputError::InputError;
};
struct TopologyError : InputError {
    using InputError::InputError;
};
struct IoError : InputError {
    using InputError::InputError;
};
struct NumericalError : Error {
    using Error::Error;
};

// Execution policy for the embarrassingly parallel kernels.  Serial is kept as
// the reference implementation that the parallel path is tested against.
enum class Exec { Serial, Parallel };

}  // namespace swing
