#pragma once

#include <stdexcept>
#include <string>

namespace systolic {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

// A single cycle touches more distinct words than one working-set buffer holds.
class WorkingSetUnderflow : public SimulationError {
 public:
  using SimulationError::SimulationError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace systolic
