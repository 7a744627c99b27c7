#pragma once

#include <stdexcept>
#include <string>

namespace haptest {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Simulation produced a non-finite state.
class SimulationDiverged : public Error {
public:
    using Error::Error;
};

/// Estimator produced a non-finite estimate or covariance.
class EstimatorDiverged : public Error {
public:
    using Error::Error;
};

/// Innovation covariance could not be inverted.
class SingularUpdate : public Error {
public:
    using Error::Error;
};

/// No contact detected in a tapping stream.
class NoImpact : public Error {
public:
    using Error::Error;
};

/// Impact window whose deformation impulse vanishes.
class DegenerateImpact : public Error {
public:
    using Error::Error;
};

/// Bad or inconsistent configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Missing or malformed data: datasets, feature matrices, CSV files.
class DataError : public Error {
public:
    using Error::Error;
};

}  // namespace haptest
