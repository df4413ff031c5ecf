#pragma once

// Error hierarchy shared by all uprop modules. Everything thrown by the
// library derives from uprop::Error so callers can catch one type at the CLI
// boundary and map it to an exit code.

#include <stdexcept>
#include <string>

namespace uprop {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A record failed invariant validation. `field` names the offending field.
class ValidationError : public Error {
public:
  ValidationError(std::string field, const std::string& msg)
      : Error(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

// Malformed input bytes (JSON syntax, bad CSV, ...). `offset` is the byte
// position when known, -1 otherwise.
class ParseError : public Error {
public:
  ParseError(const std::string& msg, long long offset = -1)
      : Error(msg), offset_(offset) {}
  long long offset() const { return offset_; }

private:
  long long offset_;
};

// A well-formed value outside an operation's domain (empty sample list,
// single-class metric input, N < 2 for kernel PMI, ...).
class InputError : public Error {
public:
  explicit InputError(const std::string& msg) : Error(msg) {}
};

// Enumeration bound exceeded in the exact oracle.
class SizeError : public Error {
public:
  explicit SizeError(const std::string& msg) : Error(msg) {}
};

// Transport-level failure after retries were exhausted.
class TransportError : public Error {
public:
  explicit TransportError(const std::string& msg) : Error(msg) {}
};

// Credentials rejected by the endpoint; never retried.
class CredentialError : public Error {
public:
  explicit CredentialError(const std::string& msg) : Error(msg) {}
};

// Endpoint cannot satisfy a required capability (e.g. token logprobs).
class CapabilityError : public Error {
public:
  explicit CapabilityError(const std::string& msg) : Error(msg) {}
};

// External stdio environment process misbehaved.
class AdapterError : public Error {
public:
  explicit AdapterError(const std::string& msg) : Error(msg) {}
};

// Replay environment saw an action that diverges from the recording.
class ReplayError : public Error {
public:
  explicit ReplayError(const std::string& msg) : Error(msg) {}
};

// File missing or unreadable.
class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace uprop
