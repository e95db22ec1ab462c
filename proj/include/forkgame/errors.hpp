#pragma once

#include <stdexcept>
#include <string>

namespace forkgame {

// Reading or writing a file failed (missing, unreadable, unwritable).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data or config does not match its schema.
class ParseError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace forkgame
