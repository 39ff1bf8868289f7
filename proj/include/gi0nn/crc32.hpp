#pragma once

#include <cstdint>
#include <string_view>

namespace gi0nn {

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320).
std::uint32_t crc32(std::string_view bytes);

}  // namespace gi0nn
