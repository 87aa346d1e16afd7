#pragma once

#include <stdexcept>
#include <string>

namespace tadsie {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class InsufficientDonorsError : public Error {
 public:
  using Error::Error;
};

class DegenerateStatisticError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class RecruitmentError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

}  // namespace tadsie
