#pragma once

#include <stdexcept>
#include <string>

namespace airrecomp {

// Machine-readable failure categories, surfaced as CLI exit codes.
enum class errc {
    config = 2,
    io = 3,
    dimension = 4,
    domain = 5,
    numeric = 6,
    budget = 7,
    format = 8,
    not_applicable = 9,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::config: return "config";
        case errc::io: return "io";
        case errc::dimension: return "dimension";
        case errc::domain: return "domain";
        case errc::numeric: return "numeric";
        case errc::budget: return "budget";
        case errc::format: return "format";
        case errc::not_applicable: return "not_applicable";
    }
    return "unknown";
}

class error : public std::runtime_error {
  public:
    error(errc category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    errc category() const { return category_; }

  private:
    errc category_;
};

} // namespace airrecomp
