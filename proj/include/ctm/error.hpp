#pragma once

#include <stdexcept>
#include <string>

namespace ctm {

// Bad or inconsistent data: empty corpora, malformed files, shape
// mismatches between a manifest and its payload. CLI exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical breakdown at runtime, e.g. a non-finite training loss.
// CLI exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ctm
