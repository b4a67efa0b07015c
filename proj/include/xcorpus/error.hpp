#pragma once

#include <stdexcept>
#include <string>

namespace xcorpus {

/// Input, configuration, or precondition failure reported to the user.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace xcorpus
