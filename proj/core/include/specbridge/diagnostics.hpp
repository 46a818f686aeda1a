// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace specbridge {

struct SourcePos {
  int line = 0;   // 1-based; 0 when unknown
  int column = 0; // 1-based
};

std::string toString(const SourcePos& pos);

/// Every failure surfaced by the toolchain carries a stable identifier
/// (e.g. "unbound-identifier") so drivers and tests can match on it.
class Error : public std::runtime_error {
public:
  Error(std::string id, std::string message, SourcePos pos = {});

  const std::string& id() const noexcept { return id_; }
  const std::string& detail() const noexcept { return detail_; }
  const SourcePos& pos() const noexcept { return pos_; }

private:
  std::string id_;
  std::string detail_;
  SourcePos pos_;
};

class LexError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

class ScopeError : public Error {
public:
  using Error::Error;
};

class TypeError : public Error {
public:
  TypeError(std::string id, std::string message, SourcePos pos, std::string expected = {},
            std::string actual = {});

  const std::string& expected() const noexcept { return expected_; }
  const std::string& actual() const noexcept { return actual_; }

private:
  std::string expected_;
  std::string actual_;
};

/// Raised by the loss and verifier backends when a property cannot be compiled.
class CompileError : public Error {
public:
  using Error::Error;
};

class ResourceError : public Error {
public:
  using Error::Error;
};

} // namespace specbridge
