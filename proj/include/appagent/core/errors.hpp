#pragma once

#include <stdexcept>
#include <string>

namespace appagent {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reasoning port.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

class MalformedBackendOutput : public Error {
 public:
  using Error::Error;
};

/// Scripted backend had no entry for a stimulus and its policy is `error`.
class ScriptMiss : public MalformedBackendOutput {
 public:
  using MalformedBackendOutput::MalformedBackendOutput;
};

// App driver. All of these are sub-task local inside the engine.
class DriverError : public Error {
 public:
  using Error::Error;
};

class UnknownApp : public DriverError {
 public:
  using DriverError::DriverError;
};

class DeviceBusy : public DriverError {
 public:
  using DriverError::DriverError;
};

class IllegalAction : public DriverError {
 public:
  using DriverError::DriverError;
};

class IndexOutOfRange : public DriverError {
 public:
  using DriverError::DriverError;
};

class CatalogParseError : public Error {
 public:
  using Error::Error;
};

class DuplicateApp : public Error {
 public:
  using Error::Error;
};

// Engine.
class UnknownAppInPlan : public Error {
 public:
  using Error::Error;
};

// History.
class StorageFailure : public Error {
 public:
  using Error::Error;
};

/// Canonical JSON did not match the expected document shape.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace appagent
