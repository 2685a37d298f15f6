#include "covseg/error.hpp"

namespace covseg {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return "usage";
    case ErrorKind::kIo:
      return "io";
    case ErrorKind::kData:
      return "data";
    case ErrorKind::kNumerical:
      return "numerical";
  }
  return "unknown";
}

}  // namespace covseg
