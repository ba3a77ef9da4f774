#pragma once

#include <stdexcept>
#include <string>

namespace safenav {

// Base class for every failure raised by the planner stack.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SAFENAV_DEFINE_ERROR(Name)              \
  class Name : public Error {                   \
   public:                                      \
    explicit Name(const std::string& what)      \
        : Error(std::string(#Name ": ") + what) {} \
  }

SAFENAV_DEFINE_ERROR(DomainError);
SAFENAV_DEFINE_ERROR(UnreachableState);
SAFENAV_DEFINE_ERROR(DegenerateStep);
SAFENAV_DEFINE_ERROR(IllPosedSteering);
SAFENAV_DEFINE_ERROR(InfeasibleGeometry);
SAFENAV_DEFINE_ERROR(InfeasibleTransition);
SAFENAV_DEFINE_ERROR(PolicyGap);
SAFENAV_DEFINE_ERROR(IllegalFineMove);
SAFENAV_DEFINE_ERROR(LoadError);
SAFENAV_DEFINE_ERROR(GameBuildError);

#undef SAFENAV_DEFINE_ERROR

}  // namespace safenav
