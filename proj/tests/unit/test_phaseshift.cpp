#include <gtest/gtest.h>

#include <numeric>

#include "posphase/errors.hpp"
#include "posphase/phaseshift/shift.hpp"

using namespace posphase;
using namespace posphase::phaseshift;
using model::kCls;
using model::kEos;

namespace {

ShiftSpec no_prefix(std::int32_t k, bool pin) {
  ShiftSpec s;
  s.k = k;
  s.pin_first = pin;
  s.prefix.clear();
  return s;
}

std::vector<TokenId> arange(TokenId from, std::size_t n) {
  std::vector<TokenId> v(n);
  std::iota(v.begin(), v.end(), from);
  return v;
}

}  // namespace

// 1-based ids [101, 102, ..., n+100] are 0-based [100, ..., n+99].
TEST(BuildPositionIds, UnpinnedShiftByHundred) {
  for (std::size_t n : {1u, 5u, 20u}) {
    EXPECT_EQ(build_position_ids(n, no_prefix(100, false), 512), arange(100, n));
  }
}

// 1-based ids [1, 102, 103, ...] are 0-based [0, 101, 102, ...].
TEST(BuildPositionIds, PinnedShiftByHundred) {
  auto ids = build_position_ids(6, no_prefix(100, true), 512);
  EXPECT_EQ(ids, (std::vector<TokenId>{0, 101, 102, 103, 104, 105}));
}

TEST(BuildPositionIds, ZeroShiftIsArange) {
  for (bool pin : {false, true}) {
    ShiftSpec spec;
    spec.pin_first = pin;
    EXPECT_EQ(build_position_ids(7, spec, 64), arange(0, 9));
    EXPECT_EQ(build_position_ids(7, no_prefix(0, pin), 64), arange(0, 7));
  }
}

TEST(BuildPositionIds, ConsecutiveDifferencesAreOne) {
  for (std::int32_t k = 0; k < 40; k += 3) {
    for (bool pin : {false, true}) {
      ShiftSpec spec;
      spec.k = k;
      spec.pin_first = pin;
      auto ids = build_position_ids(9, spec, 64);
      for (std::size_t i = pin ? 1 : 0; i + 1 < ids.size(); ++i) EXPECT_EQ(ids[i + 1] - ids[i], 1);
    }
  }
}

TEST(BuildPositionIds, Stateless) {
  ShiftSpec spec;
  spec.k = 5;
  auto direct = build_position_ids(4, spec.with_k(17), 64);
  build_position_ids(4, spec, 64);
  EXPECT_EQ(build_position_ids(4, spec.with_k(17), 64), direct);
  EXPECT_EQ(direct, arange(17, 6));
}

TEST(ApplyTemplate, DefaultTemplateAtZero) {
  std::vector<TokenId> sentence{7, 8};
  auto seq = apply_template(sentence, ShiftSpec{}, 64);
  EXPECT_EQ(seq.token_ids, (std::vector<TokenId>{kCls, kEos, 7, 8}));
  EXPECT_EQ(seq.position_ids, (std::vector<TokenId>{0, 1, 2, 3}));
  EXPECT_EQ(seq.loss_mask, (std::vector<bool>{false, false, true, true}));
}

TEST(ApplyTemplate, PinnedShiftOfTen) {
  std::vector<TokenId> sentence{7, 8};
  ShiftSpec spec;
  spec.k = 10;
  spec.pin_first = true;
  EXPECT_EQ(apply_template(sentence, spec, 64).position_ids, (std::vector<TokenId>{0, 11, 12, 13}));
}

TEST(ApplyTemplate, Errors) {
  EXPECT_THROW(apply_template(std::vector<TokenId>{}, ShiftSpec{}, 64), UsageError);
  ShiftSpec spec;
  spec.k = 61;
  EXPECT_THROW(apply_template(std::vector<TokenId>{7, 8}, spec, 64), RangeError);
}

TEST(ValidateShift, ExactBoundary) {
  EXPECT_NO_THROW(validate_shift(no_prefix(500, false), 12, 512));
  EXPECT_THROW(validate_shift(no_prefix(501, false), 12, 512), RangeError);
  EXPECT_NO_THROW(validate_shift(no_prefix(0, false), 512, 512));
  EXPECT_THROW(validate_shift(no_prefix(-1, false), 4, 512), RangeError);
}

TEST(ValidateShift, PinnedAdmitsUpToWindowMinusLength) {
  EXPECT_EQ(max_valid_shift(12, 512), 500);
  EXPECT_NO_THROW(validate_shift(no_prefix(500, true), 12, 512));
  EXPECT_THROW(validate_shift(no_prefix(501, true), 12, 512), RangeError);
  // Exhaustive: accepted exactly when k <= T - m.
  for (std::size_t m = 1; m <= 10; ++m) {
    for (std::int32_t k = 0; k < 40; ++k) {
      for (bool pin : {false, true}) {
        const bool fits = k <= max_valid_shift(m, 32) || (pin && m == 1);
        if (fits) {
          EXPECT_NO_THROW(validate_shift(no_prefix(k, pin), m, 32));
        } else {
          EXPECT_THROW(validate_shift(no_prefix(k, pin), m, 32), RangeError);
        }
      }
    }
  }
}

TEST(ShiftLists, ParseAndDefaults) {
  EXPECT_EQ(parse_shift_list("0,10, 20"), (std::vector<std::int32_t>{0, 10, 20}));
  EXPECT_THROW(parse_shift_list("0,,2"), ConfigError);
  EXPECT_THROW(parse_shift_list("0,-5"), ConfigError);
  EXPECT_THROW(parse_shift_list("abc"), ConfigError);
  EXPECT_EQ(default_shifts(64, 13), (std::vector<std::int32_t>{0, 10, 20, 30, 40, 50}));
  EXPECT_EQ(default_shifts(64, 13, 17), (std::vector<std::int32_t>{0, 17, 34, 51}));
}
