#pragma once

#include "posphase/model/config.hpp"

namespace posphase::model {

// Reserved vocabulary ids shared by every module.
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kCls = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kMask = 3;
inline constexpr TokenId kUnk = 4;
inline constexpr TokenId kFirstContentId = 5;

constexpr bool is_special(TokenId id) { return id < kFirstContentId; }

}  // namespace posphase::model
