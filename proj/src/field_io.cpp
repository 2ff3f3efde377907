#include "snse/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "snse/error.hpp"

namespace snse {
namespace {

constexpr char kMagic[8] = {'S', 'N', 'S', 'E', 'F', 'L', 'D', '1'};
constexpr std::size_t kHeader = 16;

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value)
{
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i)
        out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <class T>
T get_le(std::uint8_t const* p)
{
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
        bits |= static_cast<U>(p[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace

std::vector<std::uint8_t> encode_field(SpectralField const& f)
{
    std::vector<std::uint8_t> out;
    out.reserve(kHeader + 16 * f.grid().size());
    for (char c : kMagic)
        out.push_back(static_cast<std::uint8_t>(c));
    put_le(out, static_cast<std::uint32_t>(f.grid().cutoff()));
    put_le(out, static_cast<std::uint32_t>(f.grid().size()));
    for (cplx c : f.coeffs()) {
        put_le(out, c.real());
        put_le(out, c.imag());
    }
    return out;
}

SpectralField decode_field(std::span<std::uint8_t const> bytes, int expected_cutoff)
{
    if (bytes.size() < kHeader || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw StructuralError("checkpoint: bad magic");
    auto const cutoff = get_le<std::uint32_t>(bytes.data() + 8);
    auto const count = get_le<std::uint32_t>(bytes.data() + 12);
    if (cutoff < 1 || cutoff > 1u << 16)
        throw StructuralError("checkpoint: implausible cutoff " + std::to_string(cutoff));
    if (expected_cutoff >= 1 && static_cast<int>(cutoff) != expected_cutoff)
        throw StructuralError("checkpoint: cutoff " + std::to_string(cutoff) + " does not match expected " +
                              std::to_string(expected_cutoff));
    auto grid = GridSpec::make(static_cast<int>(cutoff));
    if (count != grid->size())
        throw StructuralError("checkpoint: mode count " + std::to_string(count) + " inconsistent with cutoff");
    if (bytes.size() != kHeader + 16 * static_cast<std::size_t>(count))
        throw StructuralError("checkpoint: payload length mismatch");
    std::vector<cplx> coeffs(count);
    auto const* p = bytes.data() + kHeader;
    for (std::size_t i = 0; i < count; ++i, p += 16)
        coeffs[i] = cplx(get_le<double>(p), get_le<double>(p + 8));
    return SpectralField(std::move(grid), std::move(coeffs));
}

std::vector<std::uint8_t> read_bytes(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw StructuralError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(std::filesystem::path const& path, std::span<std::uint8_t const> bytes)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw StructuralError("cannot write " + path.string());
    out.write(reinterpret_cast<char const*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_field(std::filesystem::path const& path, SpectralField const& f)
{
    write_bytes(path, encode_field(f));
}

SpectralField read_field(std::filesystem::path const& path, int expected_cutoff)
{
    auto const bytes = read_bytes(path);
    return decode_field(bytes, expected_cutoff);
}

std::uint64_t fnv1a64(std::span<std::uint8_t const> bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4)
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

}  // namespace snse
