#pragma once

#include <string>
#include <string_view>
#include <unordered_map>

namespace iotrim {

/// Public-suffix rule set in the publicsuffix.org list format: one rule per
/// line, `//` comments, `*.` wildcards and `!` exceptions.
class PublicSuffixList {
 public:
  static PublicSuffixList FromText(std::string_view text,
                                   std::string version = "custom");
  /// The snapshot compiled into the library.
  static const PublicSuffixList& Bundled();

  const std::string& version() const { return version_; }
  std::size_t rule_count() const { return rules_.size(); }

  /// Longest matching public suffix of a normalized name; the implicit `*`
  /// rule applies when nothing else matches.
  std::string PublicSuffix(std::string_view name) const;

  /// Public suffix plus one label ("xiaoyi.com" for "log.us.xiaoyi.com").
  /// Throws kNotApplicable for IP literals and for names that are themselves
  /// public suffixes.
  std::string RegistrableDomain(std::string_view name) const;

 private:
  enum class RuleKind { kNormal, kWildcard, kException };

  std::unordered_map<std::string, RuleKind> rules_;
  std::string version_;
};

/// Registrable second-level grouping label using the bundled snapshot.
std::string SecondLevelLabel(std::string_view name);

}  // namespace iotrim
