#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colt/mask.hpp"
#include "colt/params.hpp"
#include "colt/ticket.hpp"

namespace colt {

// Checkpoint container, little-endian throughout:
//   magic "COLT" | version u16 | object kind u8 (1=ticket, 2=params, 3=mask)
//   | record count u32 | records | CRC32 of all preceding bytes.
// Record: name length u16 | name bytes | kind tag u8 | rank u8 | dims u64 each
//   | payload.
// Kind tags 0..3 carry f32 tensor payloads (conv/linear/bias/norm), 0x40/0x41
// carry LSB-first packed mask bits (0x41 = prune-eligible), 0xFF carries the
// ticket's UTF-8 provenance text. Save -> load -> save is byte-identical.

inline constexpr uint16_t kCheckpointVersion = 1;

enum class CheckpointKind : uint8_t { ticket = 1, params = 2, mask = 3 };

void save_ticket_checkpoint(const Ticket& t, const std::string& path);
Ticket load_ticket_checkpoint(const std::string& path);

void save_params_checkpoint(const ParameterSet& ps, const std::string& path);
ParameterSet load_params_checkpoint(const std::string& path);

void save_mask_checkpoint(const Mask& m, const std::string& path);
Mask load_mask_checkpoint(const std::string& path);

/// Full file bytes as they would be written (used by round-trip checks).
std::vector<uint8_t> encode_ticket_checkpoint(const Ticket& t);

uint32_t crc32_ieee(const uint8_t* data, size_t len);

}  // namespace colt
