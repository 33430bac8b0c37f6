#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace knowtrace {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidEntity : public Error {
  public:
    using Error::Error;
};

class MalformedTriplet : public Error {
  public:
    using Error::Error;
};

class MissingRewriteBackend : public Error {
  public:
    MissingRewriteBackend() : Error("Texts rendering requires a rewrite backend") {}
};

class TemplateError : public Error {
  public:
    using Error::Error;
};

/// A generation did not match the output grammar. Keeps the offending text.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::string raw)
        : Error(what), raw_(std::move(raw)) {}

    const std::string& raw() const noexcept { return raw_; }

  private:
    std::string raw_;
};

/// Every attempt of a retried generation failed to parse.
class GenerationFormatError : public Error {
  public:
    GenerationFormatError(const std::string& what, std::vector<std::string> raw_attempts)
        : Error(what), raw_attempts_(std::move(raw_attempts)) {}

    const std::vector<std::string>& raw_attempts() const noexcept { return raw_attempts_; }

  private:
    std::vector<std::string> raw_attempts_;
};

/// A backend or remote retriever could not be reached or answered garbage.
class TransportError : public Error {
  public:
    using Error::Error;
};

class IngestError : public Error {
  public:
    using Error::Error;
};

class DatasetFormatError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

}  // namespace knowtrace
