#include "iotrim/core/public_suffix.h"

#include <vector>

#include "iotrim/core/destination.h"
#include "iotrim/core/ipv4.h"
#include "iotrim/error.h"

namespace iotrim {

extern const char kBundledPublicSuffixVersion[];
extern const unsigned char kBundledPublicSuffixSnapshot[];

namespace {

std::vector<std::string_view> SplitLabels(std::string_view name) {
  std::vector<std::string_view> labels;
  std::size_t start = 0;
  while (true) {
    const auto dot = name.find('.', start);
    labels.push_back(name.substr(start, dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return labels;
}

// Joins labels[from..] with dots.
std::string JoinFrom(const std::vector<std::string_view>& labels,
                     std::size_t from) {
  std::string out;
  for (std::size_t i = from; i < labels.size(); ++i) {
    if (!out.empty()) out += '.';
    out += labels[i];
  }
  return out;
}

}  // namespace

PublicSuffixList PublicSuffixList::FromText(std::string_view text,
                                            std::string version) {
  PublicSuffixList list;
  list.version_ = std::move(version);
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    // Rules end at the first whitespace.
    const auto ws = line.find_first_of(" \t\r");
    line = line.substr(0, ws);
    if (line.empty() || line.starts_with("//")) continue;
    RuleKind kind = RuleKind::kNormal;
    if (line.starts_with("!")) {
      kind = RuleKind::kException;
      line.remove_prefix(1);
    } else if (line.starts_with("*.")) {
      kind = RuleKind::kWildcard;
      line.remove_prefix(2);
    }
    // Unicode rules are skipped; names are compared in their ASCII form.
    if (!IsValidDnsName(line)) continue;
    const std::string rule = NormalizeDnsName(line);
    // A wildcard and a plain rule for the same base both matter; the
    // wildcard subsumes lookups one label deeper, the plain one itself.
    if (kind == RuleKind::kWildcard) {
      list.rules_["*." + rule] = kind;
    } else {
      list.rules_[rule] = kind;
    }
  }
  return list;
}

const PublicSuffixList& PublicSuffixList::Bundled() {
  static const PublicSuffixList list =
      FromText(reinterpret_cast<const char*>(kBundledPublicSuffixSnapshot), kBundledPublicSuffixVersion);
  return list;
}

std::string PublicSuffixList::PublicSuffix(std::string_view name) const {
  const std::string normalized = NormalizeDnsName(name);
  const auto labels = SplitLabels(normalized);
  const std::size_t n = labels.size();

  // Walk from the longest candidate suffix down; the first exception or the
  // longest match wins.
  std::size_t suffix_labels = 1;  // implicit "*" rule
  for (std::size_t i = 0; i < n; ++i) {
    const std::string candidate = JoinFrom(labels, i);
    const std::size_t count = n - i;
    if (auto it = rules_.find(candidate); it != rules_.end()) {
      if (it->second == RuleKind::kException) {
        suffix_labels = count - 1;
        break;
      }
      suffix_labels = std::max(suffix_labels, count);
    }
    if (i + 1 < n) {
      const std::string wildcard = "*." + JoinFrom(labels, i + 1);
      if (rules_.contains(wildcard)) {
        // An exception for this exact name outranks the wildcard.
        auto exc = rules_.find(candidate);
        if (exc == rules_.end() || exc->second != RuleKind::kException) {
          suffix_labels = std::max(suffix_labels, count);
        }
      }
    }
  }
  return JoinFrom(labels, n - std::min(suffix_labels, n));
}

std::string PublicSuffixList::RegistrableDomain(std::string_view name) const {
  if (Ipv4::TryParse(name)) {
    throw Error(ErrorCode::kNotApplicable,
                "'" + std::string(name) + "' is an IP literal");
  }
  const std::string normalized = NormalizeDnsName(name);
  const std::string suffix = PublicSuffix(normalized);
  if (suffix.size() >= normalized.size()) {
    throw Error(ErrorCode::kNotApplicable,
                "'" + normalized + "' is itself a public suffix");
  }
  const std::string_view head(normalized.data(),
                              normalized.size() - suffix.size() - 1);
  const auto dot = head.rfind('.');
  const std::string_view label =
      dot == std::string_view::npos ? head : head.substr(dot + 1);
  return std::string(label) + '.' + suffix;
}

std::string SecondLevelLabel(std::string_view name) {
  return PublicSuffixList::Bundled().RegistrableDomain(name);
}

}  // namespace iotrim
