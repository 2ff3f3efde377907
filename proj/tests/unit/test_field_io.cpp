#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "oracles.hpp"
#include "snse/error.hpp"
#include "snse/field_io.hpp"

using namespace snse;

TEST(FieldIo, HeaderLayout)
{
    auto g = GridSpec::make(4);
    auto f = SpectralField::mode(g, {1, 0}, cplx(1.0, 0.0));
    auto b = encode_field(f);
    ASSERT_EQ(b.size(), 16u + 16u * g->size());
    EXPECT_EQ(std::memcmp(b.data(), "SNSEFLD1", 8), 0);
    EXPECT_EQ(b[8], 4);  // cutoff, little-endian u32
    EXPECT_EQ(b[9] | b[10] | b[11], 0);
    EXPECT_EQ(b[12], g->size());
    // first stored mode is (0,1); (1,0) follows at index 2 in lexicographic order
    double re = 0.0;
    std::size_t const idx = static_cast<std::size_t>(g->index_of({1, 0}));
    std::memcpy(&re, b.data() + 16 + 16 * idx, 8);
    EXPECT_EQ(re, 1.0);
}

TEST(FieldIo, BitExactRoundTrip)
{
    std::mt19937_64 rng(61);
    auto g = GridSpec::make(16);
    auto f = oracle::random_field(g, rng);
    auto back = decode_field(encode_field(f), 16);
    EXPECT_EQ(back, f);
    auto dir = std::filesystem::temp_directory_path() / "snse-field-io-test";
    write_field(dir / "x.snsefld", f);
    EXPECT_EQ(read_field(dir / "x.snsefld"), f);
    std::filesystem::remove_all(dir);
}

TEST(FieldIo, CorruptInputsAreRejected)
{
    auto g = GridSpec::make(4);
    auto b = encode_field(SpectralField::mode(g, {1, 1}, 0.5));
    auto bad = b;
    bad[0] = 'X';
    EXPECT_THROW(decode_field(bad), StructuralError);
    auto truncated = b;
    truncated.pop_back();
    EXPECT_THROW(decode_field(truncated), StructuralError);
    auto count = b;
    count[12] += 1;
    EXPECT_THROW(decode_field(count), StructuralError);
    EXPECT_THROW(decode_field(b, 8), StructuralError);
    EXPECT_THROW(decode_field(std::vector<std::uint8_t>{}), StructuralError);
}

TEST(FieldIo, Fnv1a)
{
    std::string const s = "hello";
    std::vector<std::uint8_t> b(s.begin(), s.end());
    EXPECT_EQ(fnv1a64(b), 0xa430d84680aabd0bULL);
    EXPECT_EQ(fnv1a64({}), 0xcbf29ce484222325ULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}
