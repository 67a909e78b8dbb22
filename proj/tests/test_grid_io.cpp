// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "luvc/grid_io.hpp"
#include "oracles.hpp"

namespace luvc::io {
namespace {

TokenGrid float_grid(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 6);
  const std::size_t h = dim(rng), w = dim(rng), d = dim(rng);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<double> data(h * w * d);
  for (auto& v : data) v = normal(rng);
  std::vector<double> sizes(h * w);
  for (auto& s : sizes) s = 1 + rng() % 5;
  return TokenGrid(h, w, d, std::move(data), std::move(sizes));
}

TEST(Luvc1, HeaderLayout) {
  const auto bytes = encode_grid(TokenGrid(1, 2, 1, {1.0, -2.0}, {1.0, 3.0}));
  ASSERT_EQ(bytes.size(), 17u + 4 * 2 + 4 * 2);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "LUVC");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 1);   // h low byte
  EXPECT_EQ(bytes[9], 2);   // w low byte
  EXPECT_EQ(bytes[13], 1);  // d low byte
  // 1.0f little-endian is 00 00 80 3f
  EXPECT_EQ(bytes[17], 0x00);
  EXPECT_EQ(bytes[19], 0x80);
  EXPECT_EQ(bytes[20], 0x3f);
}

TEST(Luvc1, RoundTripProperty) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto g = float_grid(rng);
    EXPECT_EQ(decode_grid(encode_grid(g)), g);
  }
}

TEST(Luvc1, EmptyGrid) {
  const auto g = TokenGrid::empty(4);
  const auto back = decode_grid(encode_grid(g));
  EXPECT_TRUE(back.empty());
  EXPECT_EQ(back.d(), 4u);
}

TEST(Luvc1, RejectsMalformed) {
  auto good = encode_grid(TokenGrid(2, 2, 1, {1, 2, 3, 4}));
  EXPECT_THROW(decode_grid(std::span(good).first(10)), FormatError);
  EXPECT_THROW(decode_grid(std::span(good).first(good.size() - 1)), FormatError);
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(decode_grid(bad), FormatError);
  bad = good;
  bad[4] = 2;
  EXPECT_THROW(decode_grid(bad), FormatError);
  bad = good;
  bad[8] = 0x7f;  // h ~ 2^31: must fail on length, not allocate
  EXPECT_THROW(decode_grid(bad), FormatError);
  bad = good;
  bad.push_back(0);
  EXPECT_THROW(decode_grid(bad), FormatError);
  bad = good;
  bad[bad.size() - 2] = 0xC0;  // last size becomes non-integral
  EXPECT_THROW(decode_grid(bad), FormatError);
}

TEST(GridJson, RoundTrip) {
  std::mt19937_64 rng(2);
  const auto g = oracle::random_grid(2, 3, 2, rng);
  EXPECT_EQ(grid_from_json(grid_to_json(g)), g);
  const auto j = nlohmann::json::parse(R"({"schema":1,"h":1,"w":2,"d":1,"data":[5,6]})");
  EXPECT_EQ(grid_from_json(j).total_size(), 2.0);
  EXPECT_THROW(grid_from_json(nlohmann::json::parse(R"({"schema":1,"h":1,"w":2,"d":1,"data":[5]})")),
               FormatError);
  EXPECT_THROW(grid_from_json(nlohmann::json::parse(R"({"h":1})")), FormatError);
}

}  // namespace
}  // namespace luvc::io
