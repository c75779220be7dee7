#pragma once

#include <stdexcept>
#include <string>

namespace hpix {

// Error taxonomy. Each category maps onto one process exit code in the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid architecture description (channel lists, depth, block geometry).
class SpecError : public Error {
 public:
  using Error::Error;
};

// Tensor or image dimensions incompatible with an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Input values outside the operation's domain (non-finite pixels, non-binary masks).
class InputError : public Error {
 public:
  using Error::Error;
};

// Unreadable or malformed files, dataset layout problems.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration (empty manifest, bad flag combinations).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced or consumed during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Caller broke an API contract (e.g. missing supervision heads).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace hpix
