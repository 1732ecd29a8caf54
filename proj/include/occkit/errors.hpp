// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace occkit {

// Bad arguments, violated invariants, shape mismatches. CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem and format failures. CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// OCCG container errors, one class per failure so callers can tell them apart.
class BadMagicError : public IoError {
 public:
  explicit BadMagicError(const std::string& what) : IoError(what) {}
};

class VersionMismatchError : public IoError {
 public:
  explicit VersionMismatchError(const std::string& what) : IoError(what) {}
};

class PayloadLengthError : public IoError {
 public:
  explicit PayloadLengthError(const std::string& what) : IoError(what) {}
};

}  // namespace occkit
