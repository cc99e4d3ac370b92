#include "meltcast/errors.hpp"

namespace meltcast {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::kFormat: return "format error";
        case ErrorKind::kEmptyInput: return "empty input";
        case ErrorKind::kBoundaryData: return "boundary data error";
        case ErrorKind::kConfiguration: return "configuration error";
        case ErrorKind::kDomain: return "domain error";
        case ErrorKind::kRange: return "range error";
        case ErrorKind::kInsufficientData: return "insufficient data";
        case ErrorKind::kDegenerate: return "degenerate input";
        case ErrorKind::kIo: return "i/o error";
        case ErrorKind::kAlphaChangeRefused: return "alpha change refused";
        case ErrorKind::kMissingArtifact: return "missing artifact";
        case ErrorKind::kInternal: return "internal error";
    }
    return "unknown error";
}

}  // namespace meltcast
