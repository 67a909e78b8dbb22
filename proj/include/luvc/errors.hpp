// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace luvc {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Container dimensions do not satisfy an operation's shape contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A scalar argument is outside its documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated input data (files, JSON documents).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A 2D projector was handed tokens that no longer form a complete grid.
class ProjectorIncompatibleError : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

}  // namespace luvc
