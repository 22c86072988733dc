#ifndef HILL_REPORT_HPP
#define HILL_REPORT_HPP

#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace hill {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Ordered key = value document used for verification reports, manifests and
// the serialized basis/calibration files.
class Report {
  public:
    void set(const std::string& key, const std::string& value) {
        items_.emplace_back(key, value);
    }
    void set(const std::string& key, double value) { set(key, format_double(value)); }
    void set(const std::string& key, long long value) { set(key, std::to_string(value)); }
    void set(const std::string& key, int value) { set(key, std::to_string(value)); }
    void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

    // Record a named pass/fail check; the report fails if any check fails.
    bool check(const std::string& name, bool ok) {
        items_.emplace_back("check." + name, ok ? "pass" : "FAIL");
        if (!ok) ++failures_;
        return ok;
    }

    bool ok() const { return failures_ == 0; }
    int failures() const { return failures_; }

    const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

    void write(std::ostream& os) const {
        for (const auto& kv : items_) os << kv.first << " = " << kv.second << "\n";
    }

    // First value for key, or empty string.
    std::string get(const std::string& key) const {
        for (const auto& kv : items_)
            if (kv.first == key) return kv.second;
        return {};
    }
    double get_double(const std::string& key) const { return std::stod(get(key)); }

  private:
    std::vector<std::pair<std::string, std::string>> items_;
    int failures_ = 0;
};

}  // namespace hill

#endif
