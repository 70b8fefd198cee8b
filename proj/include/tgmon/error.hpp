#pragma once

#include <stdexcept>
#include <string>

namespace tgmon {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or missing configuration, detected at startup.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that cannot be used (unreadable export, bad registry entry).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Disk I/O failure inside the dataset directory.
class StorageError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Stored bytes no longer match their content address.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// A persisted table fails its per-line digest or a reference dangles.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Snapshot written by an incompatible format version.
class MigrationError : public Error {
 public:
  using Error::Error;
};

/// Invalid query arguments (bad period, bad limit).
class RequestError : public Error {
 public:
  using Error::Error;
};

}  // namespace tgmon
