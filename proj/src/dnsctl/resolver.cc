#include "iotrim/dnsctl/resolver.h"

#include <random>

#include "core/json_codec.h"
#include "iotrim/core/destination.h"
#include "iotrim/error.h"

namespace iotrim::dnsctl {
namespace {

using dns::Message;
using dns::Rcode;

std::string NormalizeScope(std::string_view device) {
  if (device.empty()) {
    throw Error(ErrorCode::kValidation, "rule needs a device id or '*'");
  }
  return std::string(device);
}

Message ErrorResponse(std::uint16_t id, Rcode rcode) {
  Message m;
  m.header.id = id;
  m.header.qr = true;
  m.header.rcode = rcode;
  return m;
}

}  // namespace

std::string_view ToString(RuleKind kind) {
  return kind == RuleKind::kDnsOverride ? "DNS_OVERRIDE" : "IP_DROP";
}

const BlockRule* Resolver::RuleSet::Match(std::string_view device,
                                          RuleKind kind,
                                          std::string_view target) const {
  // Device-specific rules take precedence over the wildcard scope.
  for (std::string_view scope : {device, kAllDevices}) {
    auto it = index.find(std::make_tuple(std::string(scope), kind, std::string(target)));
    if (it == index.end()) continue;
    for (const auto& rule : rules) {
      if (rule.id == it->second) return &rule;
    }
  }
  return nullptr;
}

Resolver::Resolver(Zone zone, std::uint64_t seed, TimeSource now)
    : zone_(std::move(zone)),
      cursors_(new std::atomic<std::uint32_t>[zone_.entries().size()]),
      now_(std::move(now)),
      rules_(std::make_shared<RuleSet>()) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < zone_.entries().size(); ++i) {
    cursors_[i].store(static_cast<std::uint32_t>(rng() % 1024));
  }
}

std::shared_ptr<const Resolver::RuleSet> Resolver::Snapshot() const {
  std::lock_guard lock(mu_);
  return rules_;
}

std::vector<std::uint8_t> Resolver::HandleWire(
    std::span<const std::uint8_t> query, std::string_view requester) const {
  Message decoded;
  try {
    decoded = dns::Decode(query);
  } catch (const Error&) {
    const std::uint16_t id =
        query.size() >= 2
            ? static_cast<std::uint16_t>((query[0] << 8) | query[1])
            : 0;
    return dns::Encode(ErrorResponse(id, Rcode::kFormErr));
  }
  return dns::Encode(Resolve(decoded, requester));
}

Message Resolver::Resolve(const Message& query,
                          std::string_view requester) const {
  if (query.header.qr || query.questions.size() != 1) {
    return ErrorResponse(query.header.id, Rcode::kFormErr);
  }
  if (query.header.opcode != 0) {
    return ErrorResponse(query.header.id, Rcode::kNotImp);
  }
  const dns::Question& question = query.questions.front();
  Message response;
  response.header.id = query.header.id;
  response.header.qr = true;
  response.header.rd = query.header.rd;
  response.questions.push_back(question);
  if (!IsValidDnsName(question.name)) {
    response.header.rcode = Rcode::kFormErr;
    return response;
  }
  if (question.qclass != dns::kClassIn ||
      (question.qtype != dns::type::kA && question.qtype != dns::type::kAaaa)) {
    response.header.rcode = Rcode::kNotImp;
    return response;
  }
  response.header.aa = true;
  // IPv4 only: AAAA is answered with an empty NOERROR.
  if (question.qtype == dns::type::kAaaa) return response;

  const std::string name = NormalizeDnsName(question.name);
  const auto rules = Snapshot();
  if (rules->Match(requester, RuleKind::kDnsOverride, name)) {
    response.answers.push_back(
        dns::MakeARecord(question.name, Ipv4::Loopback(), 0));
    return response;
  }
  const auto index = zone_.IndexOf(name);
  if (!index) {
    response.header.rcode = Rcode::kNxDomain;
    return response;
  }
  const ZoneEntry& entry = zone_.entries()[*index];
  const std::size_t n = entry.addresses.size();
  const std::size_t start = cursors_[*index].fetch_add(1) % n;
  for (std::size_t i = 0; i < n; ++i) {
    response.answers.push_back(dns::MakeARecord(
        question.name, entry.addresses[(start + i) % n], entry.ttl));
  }
  return response;
}

std::uint64_t Resolver::AddRule(std::string device, RuleKind kind,
                                std::string target) {
  std::lock_guard lock(mu_);
  auto key = std::make_tuple(device, kind, target);
  if (auto it = rules_->index.find(key); it != rules_->index.end()) {
    return it->second;
  }
  auto next = std::make_shared<RuleSet>(*rules_);
  BlockRule rule{next->next_id++, std::move(device), kind, std::move(target),
                 now_ ? now_() : 0.0};
  next->index.emplace(std::move(key), rule.id);
  next->rules.push_back(std::move(rule));
  const std::uint64_t id = next->rules.back().id;
  rules_ = std::move(next);
  return id;
}

std::uint64_t Resolver::SetBlock(std::string_view device, std::string_view name) {
  return AddRule(NormalizeScope(device), RuleKind::kDnsOverride,
                 NormalizeDnsName(name));
}

std::uint64_t Resolver::SetIpDrop(std::string_view device, Ipv4 address) {
  return AddRule(NormalizeScope(device), RuleKind::kIpDrop, address.ToString());
}

std::uint64_t Resolver::SetIpDrop(std::string_view device,
                                  std::string_view address) {
  return SetIpDrop(device, Ipv4::Parse(address));
}

void Resolver::ClearRule(std::uint64_t rule_id) {
  std::lock_guard lock(mu_);
  auto next = std::make_shared<RuleSet>(*rules_);
  auto it = std::find_if(next->rules.begin(), next->rules.end(),
                         [&](const BlockRule& r) { return r.id == rule_id; });
  if (it == next->rules.end()) {
    throw Error(ErrorCode::kNotFound, "no rule with id " + std::to_string(rule_id));
  }
  next->index.erase(std::make_tuple(it->device, it->kind, it->target));
  next->rules.erase(it);
  rules_ = std::move(next);
}

void Resolver::ReplaceRules(std::vector<BlockRule> rules) {
  auto next = std::make_shared<RuleSet>();
  for (auto& rule : rules) {
    rule.target = rule.kind == RuleKind::kDnsOverride
                      ? NormalizeDnsName(rule.target)
                      : Ipv4::Parse(rule.target).ToString();
    auto key = std::make_tuple(rule.device, rule.kind, rule.target);
    if (!next->index.emplace(key, rule.id).second) {
      throw Error(ErrorCode::kDuplicate, "duplicate rule for " + rule.target);
    }
    next->next_id = std::max(next->next_id, rule.id + 1);
    next->rules.push_back(std::move(rule));
  }
  std::lock_guard lock(mu_);
  rules_ = std::move(next);
}

bool Resolver::IsOverridden(std::string_view device, std::string_view name) const {
  if (!IsValidDnsName(name)) return false;
  return Snapshot()->Match(device, RuleKind::kDnsOverride,
                           NormalizeDnsName(name)) != nullptr;
}

bool Resolver::IsDropped(std::string_view device, Ipv4 address) const {
  return Snapshot()->Match(device, RuleKind::kIpDrop, address.ToString()) !=
         nullptr;
}

std::vector<BlockRule> Resolver::Rules() const { return Snapshot()->rules; }

std::size_t Resolver::rule_count() const { return Snapshot()->rules.size(); }

std::string SerializeRules(const std::vector<BlockRule>& rules) {
  using json_codec::json;
  json arr = json::array();
  for (const auto& rule : rules) {
    arr.push_back(json{{"id", rule.id},
                       {"device", rule.device},
                       {"kind", std::string(ToString(rule.kind))},
                       {"target", rule.target},
                       {"created_at", rule.created_at}});
  }
  return json{{"rules", std::move(arr)}}.dump(2);
}

std::vector<BlockRule> ParseRules(std::string_view text) {
  using json_codec::json;
  const json j = json_codec::ParseText(text, "rules file");
  json_codec::RequireOnlyKeys(j, {"rules"}, "rules file");
  std::vector<BlockRule> out;
  for (const json& r : json_codec::Required(j, "rules", "rules file")) {
    json_codec::RequireOnlyKeys(r, {"id", "device", "kind", "target", "created_at"},
                                "rule");
    BlockRule rule;
    rule.id = json_codec::Required(r, "id", "rule").get<std::uint64_t>();
    rule.device = json_codec::RequiredString(r, "device", "rule");
    const std::string kind = json_codec::RequiredString(r, "kind", "rule");
    if (kind == "DNS_OVERRIDE") rule.kind = RuleKind::kDnsOverride;
    else if (kind == "IP_DROP") rule.kind = RuleKind::kIpDrop;
    else throw Error(ErrorCode::kValidation, "unknown rule kind '" + kind + "'");
    rule.target = json_codec::RequiredString(r, "target", "rule");
    if (r.contains("created_at")) rule.created_at = r.at("created_at").get<double>();
    out.push_back(std::move(rule));
  }
  return out;
}

}  // namespace iotrim::dnsctl
