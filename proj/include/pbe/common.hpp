#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pbe {

using Index = Eigen::Index;
using cplx = std::complex<double>;
using RealField = Eigen::VectorXd;
using ComplexField = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
// node-major batch: one row per k-node, one column per spatial cell
using CellBatch = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// bad parameters, mismatched grids, violated preconditions
class ConfigError : public Error {
public:
    using Error::Error;
};

// solver breakdown, loss of positivity, tolerance not reached
class NumericalError : public Error {
public:
    using Error::Error;
};

enum class Parity { none, even, odd };

inline const char* to_string(Parity p)
{
    switch (p) {
    case Parity::even: return "even";
    case Parity::odd: return "odd";
    default: return "none";
    }
}

} // namespace pbe
