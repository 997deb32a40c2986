#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace rfsep {

using cdouble = std::complex<double>;

/// Length-N vector of complex baseband samples (I/Q).
using ComplexSignal = Eigen::VectorXcd;

using RealVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;

struct InvalidParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotPsdError : NumericalError {
    using NumericalError::NumericalError;
};

struct UnsupportedFormError : InvalidParameterError {
    using InvalidParameterError::InvalidParameterError;
};

struct InsufficientLengthError : InvalidParameterError {
    using InvalidParameterError::InvalidParameterError;
};

struct MissingTypeError : InvalidParameterError {
    using InvalidParameterError::InvalidParameterError;
};

inline double mean_power(const ComplexSignal& x) {
    if (x.size() == 0) throw InvalidParameterError("mean_power: empty signal");
    return x.squaredNorm() / static_cast<double>(x.size());
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline bool all_finite(const ComplexSignal& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i].real()) || !std::isfinite(x[i].imag())) return false;
    }
    return true;
}

}  // namespace rfsep
