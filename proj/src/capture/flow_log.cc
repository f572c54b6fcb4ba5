#include "iotrim/capture/flow_log.h"

#include "core/json_codec.h"
#include "iotrim/error.h"

namespace iotrim::capture {
namespace {

using json_codec::json;

json FlowToJson(const FlowRecord& flow) {
  json j{{"device", flow.device},
         {"dst_ip", flow.dst_ip.ToString()},
         {"dst_port", nullptr},
         {"transport", std::string(ToString(flow.transport))},
         {"bytes", flow.bytes},
         {"t_start", flow.t_start},
         {"t_end", flow.t_end},
         {"delivered", flow.delivered}};
  if (flow.dst_port) j["dst_port"] = *flow.dst_port;
  return j;
}

FlowRecord FlowFromJson(const json& j) {
  constexpr std::string_view kContext = "flow record";
  json_codec::RequireOnlyKeys(j, {"device", "dst_ip", "dst_port", "transport",
                                  "bytes", "t_start", "t_end", "delivered"},
                              kContext);
  FlowRecord flow;
  flow.device = json_codec::RequiredString(j, "device", kContext);
  flow.dst_ip = Ipv4::Parse(json_codec::RequiredString(j, "dst_ip", kContext));
  const json& port = json_codec::Required(j, "dst_port", kContext);
  if (!port.is_null()) flow.dst_port = port.get<std::uint16_t>();
  flow.transport = ParseTransport(json_codec::RequiredString(j, "transport", kContext));
  flow.bytes = json_codec::Required(j, "bytes", kContext).get<std::uint64_t>();
  flow.t_start = json_codec::RequiredNumber(j, "t_start", kContext);
  flow.t_end = json_codec::RequiredNumber(j, "t_end", kContext);
  flow.delivered = json_codec::Required(j, "delivered", kContext).get<bool>();
  if (flow.t_end < flow.t_start) {
    throw Error(ErrorCode::kValidation, "flow ends before it starts");
  }
  return flow;
}

template <typename T, typename Fn>
std::vector<T> ReadLines(std::istream& in, Fn parse) {
  std::vector<T> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(number, e.what());
    } catch (const Error& e) {
      throw ParseError(number, e.what());
    }
  }
  return out;
}

}  // namespace

std::string FlowToLine(const FlowRecord& flow) { return FlowToJson(flow).dump(); }

FlowRecord FlowFromLine(std::string_view line, std::size_t line_number) {
  try {
    return FlowFromJson(json::parse(line));
  } catch (const json::exception& e) {
    throw ParseError(line_number, e.what());
  } catch (const Error& e) {
    throw ParseError(line_number, e.what());
  }
}

void WriteFlowLog(std::ostream& out, std::span<const FlowRecord> flows) {
  for (const auto& flow : flows) out << FlowToLine(flow) << '\n';
}

std::vector<FlowRecord> ReadFlowLog(std::istream& in) {
  return ReadLines<FlowRecord>(in, FlowFromJson);
}

void WriteDnsLog(std::ostream& out, std::span<const DnsEvent> events) {
  for (const auto& e : events) {
    json answers = json::array();
    for (Ipv4 a : e.answers) answers.push_back(a.ToString());
    out << json{{"device", e.device},
                {"t", e.t},
                {"name", e.name},
                {"qtype", e.qtype},
                {"rcode", e.rcode},
                {"answers", std::move(answers)}}
               .dump()
        << '\n';
  }
}

std::vector<DnsEvent> ReadDnsLog(std::istream& in) {
  return ReadLines<DnsEvent>(in, [](const json& j) {
    constexpr std::string_view kContext = "dns event";
    json_codec::RequireOnlyKeys(j, {"device", "t", "name", "qtype", "rcode", "answers"},
                                kContext);
    DnsEvent e;
    e.device = json_codec::RequiredString(j, "device", kContext);
    e.t = json_codec::RequiredNumber(j, "t", kContext);
    e.name = json_codec::RequiredString(j, "name", kContext);
    e.qtype = json_codec::Required(j, "qtype", kContext).get<std::uint16_t>();
    e.rcode = json_codec::Required(j, "rcode", kContext).get<std::uint8_t>();
    for (const json& a : json_codec::Required(j, "answers", kContext)) {
      e.answers.push_back(Ipv4::Parse(a.get<std::string>()));
    }
    return e;
  });
}

}  // namespace iotrim::capture
