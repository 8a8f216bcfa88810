#pragma once

#include <stdexcept>
#include <string>

namespace blesim {

// Base of every error the library throws. Receiver failures are never
// thrown; they are reported in RxPacketReport.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BLESIM_DEFINE_ERROR(Name)              \
  class Name : public Error {                  \
   public:                                     \
    explicit Name(const std::string& what)     \
        : Error(std::string(#Name ": ") + what) {} \
  }

BLESIM_DEFINE_ERROR(PduLengthError);
BLESIM_DEFINE_ERROR(ModeError);
BLESIM_DEFINE_ERROR(LengthError);
BLESIM_DEFINE_ERROR(ParamError);
BLESIM_DEFINE_ERROR(ProfileError);
BLESIM_DEFINE_ERROR(RateMismatchError);
BLESIM_DEFINE_ERROR(NoSignalError);
BLESIM_DEFINE_ERROR(SyncFailure);
BLESIM_DEFINE_ERROR(MapError);
BLESIM_DEFINE_ERROR(ConfigError);
BLESIM_DEFINE_ERROR(IoError);
BLESIM_DEFINE_ERROR(InsufficientDataError);

#undef BLESIM_DEFINE_ERROR

}  // namespace blesim
