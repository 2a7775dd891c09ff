#include "oblique/audit.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace oblique {

AuditReport& AuditReport::set(const std::string& key, double value) {
  for (auto& [k, v] : values) {
    if (k == key) {
      v = value;
      return *this;
    }
  }
  values.emplace_back(key, value);
  return *this;
}

std::optional<double> AuditReport::get(const std::string& key) const {
  for (const auto& [k, v] : values)
    if (k == key) return v;
  return std::nullopt;
}

double AuditReport::at(const std::string& key) const {
  if (auto v = get(key)) return *v;
  throw std::out_of_range("audit report '" + name + "' has no key '" + key + "'");
}

AuditReport& AuditReport::note(std::string text) {
  notes.push_back(std::move(text));
  return *this;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string AuditReport::to_key_value() const {
  std::ostringstream out;
  out << "audit=" << name << '\n';
  out << "passed=" << (passed ? 1 : 0) << '\n';
  out << "applicable=" << (applicable ? 1 : 0) << '\n';
  for (const auto& [k, v] : values) out << k << '=' << format_double(v) << '\n';
  for (const auto& n : notes) out << "note=" << n << '\n';
  return out.str();
}

}  // namespace oblique
