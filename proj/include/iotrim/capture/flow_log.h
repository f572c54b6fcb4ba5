#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "iotrim/capture/capture.h"

namespace iotrim::capture {

/// Newline-delimited flow log: one object per line with exactly the
/// FlowRecord fields (device, dst_ip, dst_port, transport, bytes, t_start,
/// t_end, delivered). dst_port is null for ICMP.
void WriteFlowLog(std::ostream& out, std::span<const FlowRecord> flows);
/// Throws ParseError carrying the 1-based line number. Blank lines skipped.
std::vector<FlowRecord> ReadFlowLog(std::istream& in);

std::string FlowToLine(const FlowRecord& flow);
FlowRecord FlowFromLine(std::string_view line, std::size_t line_number = 1);

/// Same layout for DNS transactions: device, t, name, qtype, rcode, answers.
void WriteDnsLog(std::ostream& out, std::span<const DnsEvent> events);
std::vector<DnsEvent> ReadDnsLog(std::istream& in);

}  // namespace iotrim::capture
