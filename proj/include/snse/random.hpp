#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace snse {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Philox4x32-10 block function (Salmon et al., SC'11).
constexpr std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) noexcept
{
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
        std::uint64_t const p0 = static_cast<std::uint64_t>(M0) * ctr[0];
        std::uint64_t const p1 = static_cast<std::uint64_t>(M1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

/// Two independent standard normals addressed by a 128-bit counter.
inline std::array<double, 2> normal_pair(std::uint64_t key, std::array<std::uint32_t, 4> ctr) noexcept
{
    auto const w = philox4x32(ctr, {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)});
    auto unit = [](std::uint32_t hi, std::uint32_t lo) {
        std::uint64_t const bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;  // open interval (0,1)
    };
    double const u1 = unit(w[0], w[1]);
    double const u2 = unit(w[2], w[3]);
    double const r = std::sqrt(-2.0 * std::log(u1));
    double const t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
}

}  // namespace snse
