// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace pathind {

/// Shortest round-trip decimal form of `x` ("nan", "inf", "-inf" for
/// non-finite values). Output is locale-independent.
std::string csv_number(double x);

/// 64-bit FNV-1a digest rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace pathind
