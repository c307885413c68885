// Copyright 2026 The tempssvm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TEMPSSVM_ERROR_H_
#define TEMPSSVM_ERROR_H_

#include <stdexcept>
#include <string>

namespace tempssvm {

// Base of every exception thrown by the library. The CLI maps the concrete
// type onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown label, malformed scheme file, inconsistent reverse map.
class SchemeError : public Error {
 public:
  using Error::Error;
};

// Malformed corpus / score / prediction / embedding record. The message
// carries the file position when one is known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string source, int line)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  int line() const { return line_; }

 private:
  std::string source_;
  int line_;
};

// Well-formed input that violates a data contract (missing embedding,
// undeclared event, pair domain mismatch).
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

// An internal invariant failed (non-finite loss, infeasible output).
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace tempssvm

#endif  // TEMPSSVM_ERROR_H_
