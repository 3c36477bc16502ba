#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace airrecomp {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Tiny append-only CSV builder with deterministic float formatting, so a rerun
// with the same config is byte-identical.
class CsvBuilder {
  public:
    void comment(const std::string& text) { buf_ += "# " + text + "\n"; }

    CsvBuilder& field(const std::string& v) {
        sep();
        buf_ += v;
        return *this;
    }
    CsvBuilder& field(double v) { return field(format_number(v)); }
    CsvBuilder& field(int v) { return field(std::to_string(v)); }
    CsvBuilder& field(std::uint64_t v) { return field(std::to_string(v)); }

    void end_row() {
        buf_ += "\n";
        row_open_ = false;
    }

    const std::string& str() const { return buf_; }

  private:
    void sep() {
        if (row_open_) {
            buf_ += ",";
        }
        row_open_ = true;
    }
    std::string buf_;
    bool row_open_ = false;
};

} // namespace airrecomp
