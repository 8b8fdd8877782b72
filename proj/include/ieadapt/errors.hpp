// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ieadapt {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor rank or extent mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Input fails a structural check (non-stochastic map, negative entry, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

class RegistryError : public Error {
public:
    using Error::Error;
};

class InjectionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Guidance settings reference a branch that was not evaluated.
class SpecError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ieadapt
