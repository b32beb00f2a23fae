// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#pragma once

#include <stdexcept>
#include <string>

namespace drbml {

/// Base class for every error raised by the library. The CLI maps the
/// category onto its process exit code.
class Error : public std::runtime_error {
public:
  enum class Category { Usage, Data, Backend };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

private:
  Category category_;
};

class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(Category::Data, what) {}
};

class MalformedFilename : public DataError {
public:
  explicit MalformedFilename(const std::string& filename)
      : DataError("malformed microbenchmark filename: '" + filename + "'"),
        filename_(filename) {}
  const std::string& filename() const noexcept { return filename_; }

private:
  std::string filename_;
};

class UnterminatedComment : public DataError {
public:
  explicit UnterminatedComment(int line)
      : DataError("unterminated block comment opened at line " + std::to_string(line)),
        line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

class MalformedAnnotation : public DataError {
public:
  MalformedAnnotation(const std::string& text, const std::string& reason)
      : DataError("malformed race annotation (" + reason + "): '" + text + "'"),
        text_(text) {}
  const std::string& text() const noexcept { return text_; }

private:
  std::string text_;
};

class UsageError : public Error {
public:
  explicit UsageError(const std::string& what) : Error(Category::Usage, what) {}
};

class UnsupportedStrategy : public UsageError {
public:
  explicit UnsupportedStrategy(const std::string& what) : UsageError(what) {}
};

class BackendError : public Error {
public:
  explicit BackendError(const std::string& what) : Error(Category::Backend, what) {}
};

class TransportError : public BackendError {
public:
  TransportError(const std::string& what, int attempts)
      : BackendError(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

private:
  int attempts_;
};

class AuthError : public BackendError {
public:
  explicit AuthError(const std::string& what) : BackendError(what) {}
};

class CacheMiss : public BackendError {
public:
  explicit CacheMiss(const std::string& digest)
      : BackendError("no cached response for request digest " + digest), digest_(digest) {}
  const std::string& digest() const noexcept { return digest_; }

private:
  std::string digest_;
};

class BudgetExceeded : public BackendError {
public:
  explicit BudgetExceeded(long limit)
      : BackendError("request budget of " + std::to_string(limit) + " exhausted") {}
};

}  // namespace drbml
