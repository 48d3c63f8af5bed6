#include "fdtof/error.hpp"

namespace fdtof {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::DegenerateSignal: return "degenerate_signal";
    case ErrorKind::InsufficientBandwidth: return "insufficient_bandwidth";
    case ErrorKind::InconsistentExposure: return "inconsistent_exposure";
    case ErrorKind::InsufficientCycles: return "insufficient_cycles";
    case ErrorKind::UndefinedMetric: return "undefined_metric";
    case ErrorKind::Parse: return "parse_error";
    case ErrorKind::Io: return "io_error";
    }
    return "unknown";
}

} // namespace fdtof
