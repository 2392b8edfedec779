// Copyright 2026 The lrd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lrd/data.hpp"
#include "lrd/errors.hpp"

TEST_CASE("tokenize is the identity on bytes") {
  CHECK(lrd::tokenize("Ab") == std::vector<std::int32_t>{65, 98});
  CHECK(lrd::tokenize("").empty());
  CHECK(lrd::tokenize("\xff\x00") == std::vector<std::int32_t>{255});
  CHECK(lrd::tokenize(std::string("\xff\x00", 2)) == std::vector<std::int32_t>{255, 0});
  lrd::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::string s(rng.uniform_int(300), '\0');
    for (char& c : s) c = static_cast<char>(rng.uniform_int(256));
    CHECK(lrd::detokenize(lrd::tokenize(s)) == s);
  }
  const std::vector<std::int32_t> bad{1, 256};
  CHECK_THROWS_AS(lrd::detokenize(bad), lrd::InputError);
}

TEST_CASE("corpus split") {
  std::vector<std::int32_t> ids(1000);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int32_t>(i % 256);
  const lrd::Corpus c(ids, 0.02);
  CHECK(c.size() == 1000);
  CHECK(c.train().size() == 980);
  CHECK(c.held_out().size() == 20);
  CHECK(c.held_out()[0] == ids[980]);
  CHECK_THROWS_AS(lrd::Corpus(ids, 1.0), lrd::ConfigError);
  CHECK(lrd::Corpus(ids, 0.0).held_out().empty());
}

TEST_CASE("corpus file loading") {
  const auto path = (std::filesystem::temp_directory_path() / "lrd_corpus_test.txt").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "hello world";
  }
  const auto c = lrd::Corpus::from_file(path, 0.0);
  CHECK(lrd::detokenize(c.tokens()) == "hello world");
  CHECK(c.source() == path);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(lrd::Corpus::from_file("/nonexistent/corpus.txt"), lrd::InputError);
}

TEST_CASE("random batches stay inside the train span and are deterministic") {
  std::vector<std::int32_t> ids(500);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int32_t>(i % 251);
  const lrd::Corpus c(ids, 0.2);  // train = first 400
  lrd::RandomBatches a(c, 4, 16, 7, true), b(c, 4, 16, 7, true), other(c, 4, 16, 8, true);
  const auto first_a = *a.next();
  const auto first_b = *b.next();
  CHECK(first_a.tokens.ids == first_b.tokens.ids);
  CHECK(first_a.offsets == first_b.offsets);
  CHECK_FALSE(first_a.offsets == other.next()->offsets);
  for (int i = 0; i < 200; ++i) {
    const auto batch = *a.next();
    CHECK(batch.tokens.batch == 4);
    CHECK(batch.tokens.seq_len == 16);
    for (std::size_t s = 0; s < 4; ++s) {
      const std::size_t off = batch.offsets[s];
      CHECK(off + 17 <= 400);
      for (std::size_t t = 0; t < 16; ++t) {
        CHECK(batch.tokens.ids[s * 16 + t] == ids[off + t]);
        CHECK(batch.targets[s * 16 + t] == ids[off + t + 1]);
      }
    }
  }
}

TEST_CASE("window starts are uniform") {
  std::vector<std::int32_t> ids(60, 1);
  const lrd::Corpus c(ids, 0.0);
  const std::size_t seq = 11;
  const std::size_t n_starts = 60 - seq + 1;  // 50
  lrd::RandomBatches src(c, 10, seq, 123);
  std::vector<double> counts(n_starts, 0.0);
  const std::size_t draws = 100000;
  for (std::size_t i = 0; i < draws / 10; ++i) {
    const auto batch = src.next();
    for (std::size_t off : batch->offsets) counts[off] += 1.0;
  }
  const double expected = double(draws) / n_starts;
  double chi2 = 0.0;
  for (double k : counts) chi2 += (k - expected) * (k - expected) / expected;
  // 49 degrees of freedom; the 0.999 quantile is about 85.4.
  CHECK(chi2 < 85.4);
}

TEST_CASE("short corpora are rejected") {
  const lrd::Corpus c(std::vector<std::int32_t>(10, 0), 0.0);
  CHECK_THROWS_AS(lrd::RandomBatches(c, 1, 11, 0), lrd::DataError);
  CHECK_THROWS_AS(lrd::RandomBatches(c, 1, 10, 0, true), lrd::DataError);
  CHECK_NOTHROW(lrd::RandomBatches(c, 1, 10, 0));
}

TEST_CASE("sequential batches run out") {
  std::vector<std::int32_t> ids(100);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int32_t>(i);
  const lrd::Corpus c(ids, 0.0);
  lrd::SequentialBatches src(c, 2, 10);
  std::size_t n = 0;
  std::size_t expect_off = 0;
  while (auto b = src.next()) {
    CHECK(b->offsets[0] == expect_off);
    CHECK(b->tokens.ids[0] == static_cast<std::int32_t>(expect_off));
    expect_off += 20;
    ++n;
  }
  CHECK(n == 5);
}
