#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace oblique {

/// Structured result of an estimate check. Values keep insertion order so the
/// key-value rendering is stable across runs.
struct AuditReport {
  std::string name;
  bool passed = true;
  /// False when the hypotheses of the estimate are not met by the input.
  bool applicable = true;
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::string> notes;

  AuditReport& set(const std::string& key, double value);
  std::optional<double> get(const std::string& key) const;
  /// Throws std::out_of_range when the key is missing.
  double at(const std::string& key) const;
  AuditReport& note(std::string text);

  /// `key=value` lines, doubles printed with 17 significant digits.
  std::string to_key_value() const;
};

/// 17-significant-digit rendering shared by every report and CSV writer.
std::string format_double(double v);

}  // namespace oblique
