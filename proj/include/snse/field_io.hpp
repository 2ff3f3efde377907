#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "snse/spectral_field.hpp"

namespace snse {

/// Binary field checkpoint:
///   8 bytes  magic "SNSEFLD1"
///   u32      cutoff N (shells)
///   u32      number of stored half-spectrum modes
///   f64 x 2  (re, im) per mode in storage order
/// All integers and floats little-endian.
std::vector<std::uint8_t> encode_field(SpectralField const& f);

/// Throws StructuralError on bad magic, truncated payload or inconsistent counts.
/// If expected_cutoff >= 1 the stored cutoff must match.
SpectralField decode_field(std::span<std::uint8_t const> bytes, int expected_cutoff = -1);

void write_field(std::filesystem::path const& path, SpectralField const& f);
SpectralField read_field(std::filesystem::path const& path, int expected_cutoff = -1);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<std::uint8_t const> bytes);
std::string hex64(std::uint64_t v);

std::vector<std::uint8_t> read_bytes(std::filesystem::path const& path);
void write_bytes(std::filesystem::path const& path, std::span<std::uint8_t const> bytes);

}  // namespace snse
