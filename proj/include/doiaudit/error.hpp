#pragma once

#include <stdexcept>
#include <string>

namespace doiaudit {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedDoiError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised in --offline mode when a DOI has no fixture entry. Carries the DOI
// so the operator knows which fixture line is missing.
struct FixtureMissError : std::runtime_error {
    explicit FixtureMissError(const std::string& doi)
        : std::runtime_error("no fixture entry for DOI: " + doi), doi_(doi) {}
    const std::string& doi() const { return doi_; }

  private:
    std::string doi_;
};

struct MissingBaselineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IdenticalPairError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace doiaudit
